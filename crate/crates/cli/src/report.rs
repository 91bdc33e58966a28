//! Report assembly: JSON bundles with a provenance block and the CSV table
//! shapes used by the score and replication outputs.

use anyhow::Result;
use coherencykit::coherency::ALL_VARIANTS;
use coherencykit::simulate::ReplicationSummary;
use coherencykit::{DiscoveryResult, Resolution, ScoreReport};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path.as_ref())?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Provenance block; enough to re-run the invocation bit-identically.
pub fn provenance(config: &Value, seed: Option<u64>, data: Value) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "seed": seed,
        "data": data,
    })
}

fn resolution_key(r: Resolution) -> &'static str {
    match r {
        Resolution::None => "none",
        Resolution::AsCollider => "collider",
        Resolution::AsNonCollider => "noncollider",
        Resolution::OrderFirst => "order-first",
    }
}

pub fn parse_resolution(s: &str) -> Option<Resolution> {
    match s {
        "none" => Some(Resolution::None),
        "collider" => Some(Resolution::AsCollider),
        "noncollider" => Some(Resolution::AsNonCollider),
        "order-first" => Some(Resolution::OrderFirst),
        _ => None,
    }
}

/// Full discovery report: result export, one score report (plus the
/// resolved graph) per requested resolution, and provenance.
pub fn bundle(
    result: &DiscoveryResult,
    names: &[String],
    reports: &[(Resolution, ScoreReport)],
    provenance: Value,
) -> Result<Value> {
    let mut per_resolution = serde_json::Map::new();
    for (r, rep) in reports {
        let mut entry = serde_json::Map::new();
        entry.insert("scores".into(), rep.to_json(names));
        if *r != Resolution::None {
            let mut g = coherencykit::resolve(result, *r)?;
            g.set_names(names.to_vec());
            entry.insert("graph".into(), g.to_json());
        }
        per_resolution.insert(resolution_key(*r).to_string(), Value::Object(entry));
    }
    Ok(json!({
        "result": result.to_json(),
        "reports": per_resolution,
        "provenance": provenance,
    }))
}

/// Score table, one row per variant, one column per resolution (Table 2
/// layout when called with collider + noncollider).
pub fn scores_csv(reports: &[(Resolution, ScoreReport)]) -> String {
    let mut out = String::from("score");
    for (r, _) in reports {
        out.push(',');
        out.push_str(resolution_key(*r));
    }
    out.push('\n');
    for &v in ALL_VARIANTS.iter() {
        out.push_str(v.label());
        for (_, rep) in reports {
            out.push(',');
            match rep.score(v) {
                Some(s) => out.push_str(&format!("{s:.4}")),
                None => out.push_str("-"),
            }
        }
        out.push('\n');
    }
    out
}

/// Replication grid: one row per score variant (mean and bracketed std),
/// one column per sample size, matching the paper's table layout.
pub fn replication_csv(summaries: &[ReplicationSummary]) -> String {
    let mut out = String::from("score");
    for s in summaries {
        out.push_str(&format!(",n={}", s.n));
    }
    out.push('\n');
    for &v in ALL_VARIANTS.iter() {
        out.push_str(v.label());
        for s in summaries {
            match (s.mean(v), s.std(v)) {
                (Some(m), Some(sd)) => out.push_str(&format!(",{m:.4} ({sd:.4})")),
                _ => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    out.push_str("conflicts");
    for s in summaries {
        out.push_str(&format!(",{:.2}", s.mean_conflicts));
    }
    out.push('\n');
    out
}

pub fn replication_json(summaries: &[ReplicationSummary], provenance: Value) -> Value {
    json!({
        "tables": summaries,
        "provenance": provenance,
    })
}
