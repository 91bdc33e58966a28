//! Coherency scoring: enumerate Markov/faithfulness incoherent tuples,
//! evaluate the weight-function score variants, classify runs into G1/G2/G3.

use serde::{Deserialize, Serialize};

use crate::citest::TestLedger;
use crate::discovery::{contested_edges, resolve, DiscoveryError, DiscoveryResult, Resolution};
use crate::graph::{CiTuple, GraphError, MixedGraph};

/// The named weight functions of §4 / Appendix B.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    StandardTotal,
    StandardFaithfulness,
    StandardMarkov,
    CondSetSizeTotal,
    CondSetSizeFaithfulness,
    CondSetSizeMarkov,
    PathLengthFaithfulness,
    PValueFaithfulness,
}

pub const ALL_VARIANTS: [ScoreVariant; 8] = [
    ScoreVariant::StandardTotal,
    ScoreVariant::StandardFaithfulness,
    ScoreVariant::StandardMarkov,
    ScoreVariant::CondSetSizeTotal,
    ScoreVariant::CondSetSizeFaithfulness,
    ScoreVariant::CondSetSizeMarkov,
    ScoreVariant::PathLengthFaithfulness,
    ScoreVariant::PValueFaithfulness,
];

impl ScoreVariant {
    pub fn label(self) -> &'static str {
        match self {
            ScoreVariant::StandardTotal => "standard_total",
            ScoreVariant::StandardFaithfulness => "standard_faithfulness",
            ScoreVariant::StandardMarkov => "standard_markov",
            ScoreVariant::CondSetSizeTotal => "cond_set_size_total",
            ScoreVariant::CondSetSizeFaithfulness => "cond_set_size_faithfulness",
            ScoreVariant::CondSetSizeMarkov => "cond_set_size_markov",
            ScoreVariant::PathLengthFaithfulness => "path_length_faithfulness",
            ScoreVariant::PValueFaithfulness => "p_value_faithfulness",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    /// Marked conflicts or ambiguities present.
    G1,
    /// Flag-free but incoherent.
    G2,
    /// Flag-free and coherent.
    G3,
}

/// markov = tuples tested Dependent but separated in the graph (Def. 4.1);
/// faithfulness = tuples tested Independent but connected (Def. 4.2).
pub fn incoherent_tuples(
    graph: &MixedGraph,
    ledger: &TestLedger,
) -> Result<(Vec<CiTuple>, Vec<CiTuple>), GraphError> {
    if !graph.is_flag_free() {
        return Err(GraphError::Unresolved);
    }
    let mut markov = Vec::new();
    let mut faithfulness = Vec::new();
    for rec in ledger.records() {
        let sep = graph.separation_indicator(&rec.tuple)? == 1;
        if rec.independent() {
            if !sep {
                faithfulness.push(rec.tuple.clone());
            }
        } else if sep {
            markov.push(rec.tuple.clone());
        }
    }
    Ok((markov, faithfulness))
}

/// Weight of one tested tuple under a variant. PathLength and PValue weights
/// vanish on T^dep; PathLength uses exp(-d(x,y)) with d the shortest
/// collider-free path in the output graph (0 when none exists); PValue uses
/// ln(1 + (p - alpha)). Oracle records carry no p-value; their certainty is
/// read as p = 1 for the purpose of the p-value weight.
pub fn weight(
    variant: ScoreVariant,
    t: &CiTuple,
    ledger: &TestLedger,
    graph: &MixedGraph,
) -> f64 {
    let rec = ledger.get(t).expect("tuple must be in the ledger");
    match variant {
        ScoreVariant::StandardTotal
        | ScoreVariant::StandardFaithfulness
        | ScoreVariant::StandardMarkov => 1.0,
        ScoreVariant::CondSetSizeTotal
        | ScoreVariant::CondSetSizeFaithfulness
        | ScoreVariant::CondSetSizeMarkov => (-(t.s.len() as f64)).exp(),
        ScoreVariant::PathLengthFaithfulness => {
            if !rec.independent() {
                0.0
            } else {
                match graph.shortest_collider_free_path_length(t.x, t.y) {
                    Some(len) => (-(len as f64)).exp(),
                    None => 0.0,
                }
            }
        }
        ScoreVariant::PValueFaithfulness => {
            if !rec.independent() {
                0.0
            } else {
                let p = rec.p_value.unwrap_or(1.0);
                (1.0 + (p - ledger.alpha())).ln()
            }
        }
    }
}

/// Def. 4.3: sc = 1 - (sum of w * iota) / (sum of w) over the tested tuples,
/// with iota the mismatch indicator restricted per variant (faithfulness
/// variants count tested-independent-but-connected, Markov variants count
/// tested-dependent-but-separated, total variants count both). All
/// denominators run over the full ledger T, the convention under which the
/// paper's Table 2 reproduces. An empty or all-zero denominator yields 1.
pub fn coherency_score(
    graph: &MixedGraph,
    ledger: &TestLedger,
    variant: ScoreVariant,
) -> Result<f64, GraphError> {
    if !graph.is_flag_free() {
        return Err(GraphError::Unresolved);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for rec in ledger.records() {
        let w = weight(variant, &rec.tuple, ledger, graph);
        den += w;
        if w == 0.0 {
            continue;
        }
        let sep = graph.separation_indicator(&rec.tuple)? == 1;
        let faith_inc = rec.independent() && !sep;
        let markov_inc = !rec.independent() && sep;
        let counted = match variant {
            ScoreVariant::StandardTotal | ScoreVariant::CondSetSizeTotal => {
                faith_inc || markov_inc
            }
            ScoreVariant::StandardFaithfulness
            | ScoreVariant::CondSetSizeFaithfulness
            | ScoreVariant::PathLengthFaithfulness
            | ScoreVariant::PValueFaithfulness => faith_inc,
            ScoreVariant::StandardMarkov | ScoreVariant::CondSetSizeMarkov => markov_inc,
        };
        if counted {
            num += w;
        }
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - num / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScoreReport {
    pub scores: Vec<(ScoreVariant, f64)>,
    pub markov_incoherent: Vec<CiTuple>,
    pub faithfulness_incoherent: Vec<CiTuple>,
    pub conflict_count: usize,
    pub ambiguity_count: usize,
    pub outcome_class: OutcomeClass,
}

impl ScoreReport {
    pub fn score(&self, v: ScoreVariant) -> Option<f64> {
        self.scores.iter().find(|(sv, _)| *sv == v).map(|&(_, s)| s)
    }

    pub fn to_json(&self, names: &[String]) -> serde_json::Value {
        let tuple_json = |t: &CiTuple| {
            serde_json::json!({
                "x": names[t.x],
                "y": names[t.y],
                "s": t.s.iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
            })
        };
        serde_json::json!({
            "scores": self.scores.iter()
                .map(|&(v, s)| (v.label().to_string(), round4(s)))
                .collect::<serde_json::Map<String, serde_json::Value>>(),
            "markov_incoherent": self.markov_incoherent.iter().map(tuple_json).collect::<Vec<_>>(),
            "faithfulness_incoherent": self.faithfulness_incoherent.iter().map(tuple_json).collect::<Vec<_>>(),
            "conflicts": self.conflict_count,
            "ambiguities": self.ambiguity_count,
            "class": format!("{:?}", self.outcome_class),
        })
    }
}

fn round4(x: f64) -> serde_json::Value {
    serde_json::json!((x * 1e4).round() / 1e4)
}

/// Score a discovery result. G1 outputs (with resolution None) carry counts
/// but no scores, since the paper defines none for them; otherwise the result
/// is resolved and all eight variants plus the incoherent lists are computed.
pub fn score_report(
    result: &DiscoveryResult,
    resolution: Resolution,
) -> Result<ScoreReport, DiscoveryError> {
    let conflict_count = result.graph.conflict_count().max(contested_edges(result));
    let ambiguity_count = result.graph.ambiguity_count();
    if resolution == Resolution::None && !result.graph.is_flag_free() {
        return Ok(ScoreReport {
            scores: Vec::new(),
            markov_incoherent: Vec::new(),
            faithfulness_incoherent: Vec::new(),
            conflict_count,
            ambiguity_count,
            outcome_class: OutcomeClass::G1,
        });
    }
    let graph = resolve(result, effective(resolution, result))?;
    let (markov, faith) = incoherent_tuples(&graph, &result.ledger)?;
    let scores = ALL_VARIANTS
        .iter()
        .map(|&v| Ok((v, coherency_score(&graph, &result.ledger, v)?)))
        .collect::<Result<Vec<_>, GraphError>>()?;
    let outcome_class = if !result.graph.is_flag_free() {
        OutcomeClass::G1
    } else if markov.is_empty() && faith.is_empty() {
        OutcomeClass::G3
    } else {
        OutcomeClass::G2
    };
    Ok(ScoreReport {
        scores,
        markov_incoherent: markov,
        faithfulness_incoherent: faith,
        conflict_count,
        ambiguity_count,
        outcome_class,
    })
}

fn effective(resolution: Resolution, result: &DiscoveryResult) -> Resolution {
    // Resolution::None on a flag-free result is a no-op resolve.
    if resolution == Resolution::None && result.graph.is_flag_free() {
        Resolution::None
    } else {
        resolution
    }
}
