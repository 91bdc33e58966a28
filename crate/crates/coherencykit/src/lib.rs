//! coherencykit: constraint-based causal discovery that records every
//! conditional-independence test it performs and scores the internal
//! coherency of its own output against that ledger.
//!
//! The crate is organized around one pipeline: a [`discovery::run_pc`] run
//! collects a [`citest::TestLedger`] while pruning and orienting a
//! [`graph::MixedGraph`]; [`coherency::score_report`] then compares the
//! graph's separation statements with the recorded test verdicts.
//! [`simulate`] provides the linear-Gaussian model catalog and the seeded
//! replication harness for the benchmark tables.

pub mod citest;
pub mod coherency;
pub mod discovery;
pub mod graph;
pub mod simulate;

pub use citest::{
    CiTester, Dataset, Decision, FisherZ, GraphOracle, MarginOracle, RelationOracle, TestLedger,
};
pub use coherency::{coherency_score, incoherent_tuples, score_report, OutcomeClass, ScoreReport, ScoreVariant};
pub use discovery::{
    resolve, run_pc, ColliderPolicy, DiscoveryResult, Resolution, RunConfig, Variant,
};
pub use graph::{markov_equivalent, CiTuple, EdgeMark, MixedGraph, NodeId};
pub use simulate::{build_model, population_covariance, replicate, sample, ModelId, Scm};
