use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coherencykit::simulate::{build_model, replicate, sample, ModelId, ALL_MODELS};
use coherencykit::{
    run_pc, score_report, CiTuple, ColliderPolicy, Dataset, FisherZ, GraphOracle, MixedGraph,
    Resolution, RunConfig, ScoreReport, Variant,
};
use coherencykit_cli::ingest::{load_auto_mpg, load_csv, MissingPolicy, AUTO_MPG_ORDER};
use coherencykit_cli::report;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "coherencykit", version, about = "Instrumented PC discovery with internal coherency scores")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run PC on a dataset or simulated model and score the result.
    Discover(DiscoverArgs),
    /// Repeated simulate-discover-score runs aggregated into a table.
    Replicate(ReplicateArgs),
    /// Answer separation queries against a graph fixture.
    Dsep(DsepArgs),
    /// List the model catalog.
    Models,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Classic,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Mark,
    Overwrite,
    Majority,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Classic => Variant::Classic,
            VariantArg::Stable => Variant::Stable,
        }
    }
}

impl From<PolicyArg> for ColliderPolicy {
    fn from(p: PolicyArg) -> ColliderPolicy {
        match p {
            PolicyArg::Mark => ColliderPolicy::MarkConflicts,
            PolicyArg::Overwrite => ColliderPolicy::Overwrite,
            PolicyArg::Majority => ColliderPolicy::MajorityAmbiguity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct DiscoverArgs {
    /// CSV or whitespace table with header.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Auto MPG preset: six continuous columns, missing rows dropped,
    /// stable skeleton with majority ambiguity detection.
    #[arg(long)]
    auto_mpg: bool,
    /// Simulate this catalog model instead of reading a file.
    #[arg(long)]
    model: Option<String>,
    /// Edge coefficient for models that take one.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Sample size for simulated data.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Use the error-free d-separation oracle instead of sampled data
    /// (models only).
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Comma-separated: none, collider, noncollider, order-first.
    #[arg(long)]
    resolve: Option<String>,
    /// Comma-separated variable processing order (names or indices), or
    /// "default".
    #[arg(long)]
    order: Option<String>,
    #[arg(long, env = "COHERENCYKIT_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Write reports into this directory instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReplicateArgs {
    #[arg(long)]
    model: String,
    /// Comma-separated sample sizes.
    #[arg(long, default_value = "1000")]
    n: String,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, env = "COHERENCYKIT_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Stable)]
    variant: VariantArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Mark)]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DsepArgs {
    /// Edge-list fixture: `A -> B` / `A -- B`, one edge per line.
    #[arg(long)]
    graph: PathBuf,
    /// Queries of the form "X Y | Z W" (separating set after the bar).
    #[arg(required = true)]
    queries: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Discover(a) => cmd_discover(a),
        Cmd::Replicate(a) => cmd_replicate(a),
        Cmd::Dsep(a) => cmd_dsep(a),
        Cmd::Models => cmd_models(),
    }
}

fn parse_model(s: &str) -> Result<ModelId> {
    ModelId::parse(s).ok_or_else(|| {
        anyhow!(
            "unknown model {s:?}; available: {}",
            ALL_MODELS.map(|m| m.name()).join(", ")
        )
    })
}

fn parse_order(spec: &str, names: &[String]) -> Result<Option<Vec<usize>>> {
    if spec == "default" {
        return Ok(None);
    }
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != names.len() {
        bail!("--order lists {} entries, dataset has {}", parts.len(), names.len());
    }
    let mut order = Vec::with_capacity(parts.len());
    for p in &parts {
        let idx = match p.parse::<usize>() {
            Ok(i) if i < names.len() => i,
            _ => names
                .iter()
                .position(|n| n == p)
                .ok_or_else(|| anyhow!("--order entry {p:?} is not a column"))?,
        };
        if order.contains(&idx) {
            bail!("--order repeats {p:?}");
        }
        order.push(idx);
    }
    Ok(Some(order))
}

fn parse_resolutions(spec: &str) -> Result<Vec<Resolution>> {
    spec.split(',')
        .map(str::trim)
        .map(|p| report::parse_resolution(p).ok_or_else(|| anyhow!("unknown resolution {p:?}")))
        .collect()
}

fn write_or_print(output: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match output {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_discover(a: DiscoverArgs) -> Result<()> {
    let seed = a.seed.unwrap_or(0);
    let mut cfg = RunConfig {
        alpha: a.alpha,
        seed,
        ..RunConfig::default()
    };

    // Sources: --auto-mpg / --data / --model are mutually exclusive inputs.
    let sources = [a.auto_mpg, a.data.is_some() && !a.auto_mpg, a.model.is_some()];
    if sources.iter().filter(|&&s| s).count() != 1 {
        bail!("specify exactly one of --auto-mpg, --data, --model");
    }

    enum Source {
        Data(Dataset, Value),
        Oracle(MixedGraph, Vec<String>, Value),
    }

    let source = if a.auto_mpg {
        let path = a
            .data
            .clone()
            .unwrap_or_else(|| PathBuf::from("data/auto-mpg.csv"));
        let data = load_auto_mpg(&path)?;
        cfg.variant = Variant::Stable;
        cfg.collider_policy = ColliderPolicy::MajorityAmbiguity;
        cfg.variable_order = Some(AUTO_MPG_ORDER.to_vec());
        let prov = json!({
            "path": path.display().to_string(),
            "sha256": report::sha256_file(&path)?,
            "rows": data.n(),
            "columns": data.columns.clone(),
        });
        Source::Data(data, prov)
    } else if let Some(path) = &a.data {
        let data = load_csv(path, None, MissingPolicy::DropRows)?;
        let prov = json!({
            "path": path.display().to_string(),
            "sha256": report::sha256_file(path)?,
            "rows": data.n(),
            "columns": data.columns.clone(),
        });
        Source::Data(data, prov)
    } else {
        let id = parse_model(a.model.as_deref().unwrap())?;
        let scm = build_model(id, a.c);
        if a.oracle {
            let names = scm.observed_names();
            let prov = json!({ "model": id.name(), "c": a.c, "oracle": true });
            Source::Oracle(scm.dag(), names, prov)
        } else {
            let data = sample(&scm, a.n, seed);
            let prov = json!({ "model": id.name(), "c": a.c, "n": a.n, "seed": seed });
            Source::Data(data, prov)
        }
    };

    if let Some(v) = a.variant {
        cfg.variant = v.into();
    }
    if let Some(p) = a.policy {
        cfg.collider_policy = p.into();
    }

    let (mut result, names, data_prov) = match source {
        Source::Data(data, prov) => {
            if let Some(spec) = &a.order {
                cfg.variable_order = parse_order(spec, &data.columns)?;
            }
            let tester = FisherZ::new(&data, cfg.alpha);
            let result = run_pc(&tester, data.d(), &cfg)?;
            (result, data.columns.clone(), prov)
        }
        Source::Oracle(dag, names, prov) => {
            if let Some(spec) = &a.order {
                cfg.variable_order = parse_order(spec, &names)?;
            }
            let observed = names.len();
            let oracle = GraphOracle::new(dag)?;
            let result = run_pc(&oracle, observed, &cfg)?;
            (result, names, prov)
        }
    };

    result.graph.set_names(names.clone());

    // Resolution list: explicit, or the flag/ambiguity-dependent default
    // (side-by-side collider and noncollider views when anything is open).
    let resolutions = match &a.resolve {
        Some(spec) => parse_resolutions(spec)?,
        None => {
            if result.graph.is_flag_free() && result.graph.ambiguity_count() == 0 {
                vec![Resolution::None]
            } else {
                vec![Resolution::AsCollider, Resolution::AsNonCollider]
            }
        }
    };

    let mut reports: Vec<(Resolution, ScoreReport)> = Vec::new();
    for r in resolutions {
        let rep = score_report(&result, r)?;
        if rep.outcome_class == coherencykit::OutcomeClass::G1 && rep.scores.is_empty() {
            eprintln!("warning: unresolved conflicts; no scores under resolution `none`");
        }
        reports.push((r, rep));
    }

    let prov = report::provenance(
        &serde_json::to_value(&result.config)?,
        a.seed,
        data_prov,
    );
    match a.format {
        FormatArg::Json => {
            let bundle = report::bundle(&result, &names, &reports, prov)?;
            write_or_print(
                a.output.as_deref(),
                "report.json",
                &serde_json::to_string_pretty(&bundle)?,
            )
        }
        FormatArg::Csv => {
            write_or_print(a.output.as_deref(), "scores.csv", &report::scores_csv(&reports))
        }
    }
}

fn cmd_replicate(a: ReplicateArgs) -> Result<()> {
    let id = parse_model(&a.model)?;
    let scm = build_model(id, a.c);
    let seed = a.seed.unwrap_or(0);
    let cfg = RunConfig {
        variant: a.variant.into(),
        collider_policy: a.policy.into(),
        alpha: a.alpha,
        seed,
        ..RunConfig::default()
    };
    let sizes: Vec<usize> = a
        .n
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| anyhow!("bad sample size {p:?}")))
        .collect::<Result<_>>()?;
    let mut summaries = Vec::with_capacity(sizes.len());
    for &n in &sizes {
        summaries.push(replicate(&scm, n, a.reps, &cfg, seed)?);
    }
    let prov = report::provenance(
        &serde_json::to_value(&cfg)?,
        a.seed,
        json!({ "model": id.name(), "c": a.c, "reps": a.reps, "n": sizes }),
    );
    match a.format {
        FormatArg::Csv => write_or_print(
            a.output.as_deref(),
            "replication.csv",
            &report::replication_csv(&summaries),
        ),
        FormatArg::Json => write_or_print(
            a.output.as_deref(),
            "replication.json",
            &serde_json::to_string_pretty(&report::replication_json(&summaries, prov))?,
        ),
    }
}

fn parse_query(q: &str, g: &MixedGraph) -> Result<CiTuple> {
    let (pair, cond) = match q.split_once('|') {
        Some((p, c)) => (p, c),
        None => (q, ""),
    };
    let node = |tok: &str| {
        g.names()
            .iter()
            .position(|n| n == tok)
            .ok_or_else(|| anyhow!("unknown node {tok:?} in query {q:?}"))
    };
    let pair: Vec<&str> = pair.split_whitespace().collect();
    if pair.len() != 2 {
        bail!("query {q:?} must name exactly two endpoint nodes");
    }
    let s: Vec<usize> = cond
        .split_whitespace()
        .map(node)
        .collect::<Result<_>>()?;
    Ok(CiTuple::new(node(pair[0])?, node(pair[1])?, s))
}

fn cmd_dsep(a: DsepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.graph)
        .with_context(|| format!("reading {}", a.graph.display()))?;
    let g = MixedGraph::parse_edge_list(&text)?;
    for q in &a.queries {
        let t = parse_query(q, &g)?;
        let sep = g.separation_indicator(&t)? == 1;
        println!("{}: {}", q.trim(), if sep { "separated" } else { "connected" });
    }
    Ok(())
}

fn cmd_models() -> Result<()> {
    for m in ALL_MODELS {
        let scm = build_model(m, 1.0);
        println!(
            "{:22} observed={} latent={}{}",
            m.name(),
            scm.observed_names().join(","),
            scm.latent.iter().filter(|&&l| l).count(),
            if m.takes_c() { "  (takes --c)" } else { "" },
        );
    }
    Ok(())
}
