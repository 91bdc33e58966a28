//! Conditional-independence testing with a recording ledger: Fisher-Z on
//! data, a graph oracle, and a relation oracle replaying explicitly stated
//! (in)dependencies.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::graph::{CiTuple, GraphError, MixedGraph};

/// Correlation clamp applied before the z-transform; |r| -> 1 then decides
/// Dependent, the only sensible limit.
pub const CORR_CLAMP_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Independent,
    Dependent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Skeleton,
    Orientation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    #[serde(flatten)]
    pub tuple: CiTuple,
    pub decision: Decision,
    pub p_value: Option<f64>,
    pub statistic: Option<f64>,
    pub phase: Phase,
    pub order: usize,
}

impl TestRecord {
    pub fn independent(&self) -> bool {
        self.decision == Decision::Independent
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CiError {
    #[error("conditioning set of size {s} too large for {n} samples")]
    InsufficientSamples { n: usize, s: usize },
    #[error("degenerate data: correlation submatrix is singular")]
    DegenerateData,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A CI decision procedure. Implementations must be pure: the ledger relies
/// on the verdict for a tuple being stable within a run.
pub trait CiTester {
    fn test(&self, t: &CiTuple) -> Result<(Decision, Option<f64>, Option<f64>), CiError>;
}

// ---------------------------------------------------------------------------
// Dataset and Fisher-Z
// ---------------------------------------------------------------------------

/// Column-named sample matrix with no missing entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// Row-major n x d values.
    pub values: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(columns: Vec<String>, values: Vec<Vec<f64>>) -> Self {
        assert!(!values.is_empty(), "dataset needs at least one row");
        assert!(values.iter().all(|r| r.len() == columns.len()));
        Dataset { columns, values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// Reorder / subset columns by index.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            values: self
                .values
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        }
    }

    /// Sample Pearson correlation matrix.
    pub fn correlation_matrix(&self) -> Vec<Vec<f64>> {
        let (n, d) = (self.n(), self.d());
        let mean: Vec<f64> = (0..d)
            .map(|j| self.values.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let mut cov = vec![vec![0.0; d]; d];
        for r in &self.values {
            for i in 0..d {
                for j in i..d {
                    cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        let sd: Vec<f64> = (0..d).map(|i| cov[i][i].sqrt()).collect();
        let mut corr = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in i..d {
                let c = if sd[i] > 0.0 && sd[j] > 0.0 {
                    cov[i][j] / (sd[i] * sd[j])
                } else if i == j {
                    1.0
                } else {
                    0.0
                };
                corr[i][j] = c;
                corr[j][i] = c;
            }
        }
        corr
    }
}

/// Gauss-Jordan inversion for the small correlation submatrices Fisher-Z
/// needs (|S| + 2 rows). Returns None when the matrix is singular.
fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let k = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut ext = row.clone();
            ext.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            ext
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for row in 0..k {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for x in 0..2 * k {
                        a[row][x] -= f * a[col][x];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[k..].to_vec()).collect())
}

/// Sample partial correlation of columns x, y given S via inversion of the
/// correlation submatrix (precision-matrix formula), clamped to
/// +-(1 - 1e-12) before any z-transform.
pub fn partial_correlation(data: &Dataset, t: &CiTuple) -> Result<f64, CiError> {
    let corr = data.correlation_matrix();
    partial_correlation_from(&corr, data.n(), t)
}

pub fn partial_correlation_from(
    corr: &[Vec<f64>],
    n: usize,
    t: &CiTuple,
) -> Result<f64, CiError> {
    if t.s.len() + 2 > n {
        return Err(CiError::InsufficientSamples { n, s: t.s.len() });
    }
    if t.s.is_empty() {
        // Plain Pearson correlation; skipping the inversion keeps exact
        // copies (r = +/-1) on the clamped path instead of erroring on the
        // singular 2x2 submatrix.
        let r = corr[t.x][t.y];
        return Ok(r.clamp(-(1.0 - CORR_CLAMP_EPS), 1.0 - CORR_CLAMP_EPS));
    }
    let idx: Vec<usize> = [t.x, t.y].iter().chain(t.s.iter()).copied().collect();
    let sub: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| idx.iter().map(|&j| corr[i][j]).collect())
        .collect();
    let prec = invert(&sub).ok_or(CiError::DegenerateData)?;
    let r = -prec[0][1] / (prec[0][0] * prec[1][1]).sqrt();
    Ok(r.clamp(-(1.0 - CORR_CLAMP_EPS), 1.0 - CORR_CLAMP_EPS))
}

/// Fisher-Z tester over a dataset; caches the correlation matrix.
pub struct FisherZ {
    corr: Vec<Vec<f64>>,
    n: usize,
    alpha: f64,
}

impl FisherZ {
    pub fn new(data: &Dataset, alpha: f64) -> Self {
        FisherZ {
            corr: data.correlation_matrix(),
            n: data.n(),
            alpha,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// z = atanh(r); statistic = sqrt(n - |S| - 3) * |z|; p = 2 (1 - Phi(stat)).
    pub fn evaluate(&self, t: &CiTuple) -> Result<(Decision, f64, f64), CiError> {
        if self.n < t.s.len() + 4 {
            return Err(CiError::InsufficientSamples {
                n: self.n,
                s: t.s.len(),
            });
        }
        let r = partial_correlation_from(&self.corr, self.n, t)?;
        let z = 0.5 * ((1.0 + r) / (1.0 - r)).ln();
        let stat = ((self.n - t.s.len() - 3) as f64).sqrt() * z.abs();
        let normal = Normal::new(0.0, 1.0).unwrap();
        let p = 2.0 * (1.0 - normal.cdf(stat));
        let decision = if p > self.alpha {
            Decision::Independent
        } else {
            Decision::Dependent
        };
        Ok((decision, p, stat))
    }
}

impl CiTester for FisherZ {
    fn test(&self, t: &CiTuple) -> Result<(Decision, Option<f64>, Option<f64>), CiError> {
        let (d, p, stat) = self.evaluate(t)?;
        Ok((d, Some(p), Some(stat)))
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// Error-free tester: Independent iff d-separated in the truth DAG.
pub struct GraphOracle {
    dag: MixedGraph,
}

impl GraphOracle {
    pub fn new(dag: MixedGraph) -> Result<Self, CiError> {
        if !dag.is_dag() {
            return Err(GraphError::NotADag.into());
        }
        Ok(GraphOracle { dag })
    }
}

impl CiTester for GraphOracle {
    fn test(&self, t: &CiTuple) -> Result<(Decision, Option<f64>, Option<f64>), CiError> {
        let sep = self.dag.d_separated(t)?;
        let d = if sep {
            Decision::Independent
        } else {
            Decision::Dependent
        };
        Ok((d, None, None))
    }
}

/// Error-free tester over the observed margin of a DAG with latent
/// variables: queries use observed indices, verdicts are d-separations in
/// the full DAG (conditioning restricted to observed variables).
pub struct MarginOracle {
    dag: MixedGraph,
    observed: Vec<usize>,
}

impl MarginOracle {
    pub fn new(dag: MixedGraph, observed: Vec<usize>) -> Result<Self, CiError> {
        if !dag.is_dag() {
            return Err(GraphError::NotADag.into());
        }
        Ok(MarginOracle { dag, observed })
    }
}

impl CiTester for MarginOracle {
    fn test(&self, t: &CiTuple) -> Result<(Decision, Option<f64>, Option<f64>), CiError> {
        let full = CiTuple::new(
            self.observed[t.x],
            self.observed[t.y],
            t.s.iter().map(|&v| self.observed[v]),
        );
        let d = if self.dag.d_separated(&full)? {
            Decision::Independent
        } else {
            Decision::Dependent
        };
        Ok((d, None, None))
    }
}

/// Replays an explicitly stated independence list: Independent iff the
/// canonical tuple is in the set, Dependent otherwise.
pub struct RelationOracle {
    independencies: BTreeSet<CiTuple>,
}

impl RelationOracle {
    pub fn new(independencies: impl IntoIterator<Item = CiTuple>) -> Self {
        RelationOracle {
            independencies: independencies.into_iter().collect(),
        }
    }
}

impl CiTester for RelationOracle {
    fn test(&self, t: &CiTuple) -> Result<(Decision, Option<f64>, Option<f64>), CiError> {
        let d = if self.independencies.contains(t) {
            Decision::Independent
        } else {
            Decision::Dependent
        };
        Ok((d, None, None))
    }
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

/// The ordered record T of every CI test performed in one run. First result
/// wins: re-queries return the stored record, so the test indicator is a
/// function of the tuple within a run.
#[derive(Clone, Debug, Serialize)]
pub struct TestLedger {
    alpha: f64,
    records: Vec<TestRecord>,
    #[serde(skip)]
    index: HashMap<CiTuple, usize>,
}

impl TestLedger {
    pub fn new(alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha < 1.0);
        TestLedger {
            alpha,
            records: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TestRecord] {
        &self.records
    }

    pub fn get(&self, t: &CiTuple) -> Option<&TestRecord> {
        self.index.get(t).map(|&i| &self.records[i])
    }

    pub fn contains(&self, t: &CiTuple) -> bool {
        self.index.contains_key(t)
    }

    /// Stored record if already tested, else invoke the tester and record.
    pub fn record(
        &mut self,
        tester: &dyn CiTester,
        t: CiTuple,
        phase: Phase,
    ) -> Result<&TestRecord, CiError> {
        if let Some(&i) = self.index.get(&t) {
            return Ok(&self.records[i]);
        }
        let (decision, p_value, statistic) = tester.test(&t)?;
        let order = self.records.len();
        self.index.insert(t.clone(), order);
        self.records.push(TestRecord {
            tuple: t,
            decision,
            p_value,
            statistic,
            phase,
            order,
        });
        Ok(self.records.last().unwrap())
    }

    /// Tuples tested Independent (T^ind).
    pub fn independent(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.iter().filter(|r| r.independent())
    }

    /// Tuples tested Dependent (T^dep).
    pub fn dependent(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.iter().filter(|r| !r.independent())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.alpha,
            "records": self.records.iter().map(|r| serde_json::json!({
                "x": r.tuple.x,
                "y": r.tuple.y,
                "s": r.tuple.s,
                "decision": match r.decision {
                    Decision::Independent => "independent",
                    Decision::Dependent => "dependent",
                },
                "p_value": r.p_value,
                "statistic": r.statistic,
                "phase": r.phase,
                "order": r.order,
            })).collect::<Vec<_>>(),
        })
    }
}
