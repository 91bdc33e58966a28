//! The instrumented PC algorithm: skeleton search, collider orientation with
//! conflict detection, majority-style ambiguity detection, Meek rules, and
//! pluggable conflict/ambiguity resolution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::citest::{CiError, CiTester, Phase, TestLedger};
use crate::graph::{meek_applies, meek_closure, CiTuple, GraphError, MixedGraph, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Classic,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColliderPolicy {
    /// Keep the earlier arrow, flag the edge (Fig. 1's dotted edges).
    MarkConflicts,
    /// Last orientation wins; the classic implicit resolution.
    Overwrite,
    /// Majority-style sepset vote per unshielded triple; ties are marked
    /// ambiguous instead of committed.
    MajorityAmbiguity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    None,
    AsCollider,
    AsNonCollider,
    OrderFirst,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub variant: Variant,
    pub collider_policy: ColliderPolicy,
    pub resolution: Resolution,
    pub alpha: f64,
    /// Permutation of 0..d; pair iteration, subset pools and subset
    /// enumeration all follow this order. Identity when absent.
    pub variable_order: Option<Vec<NodeId>>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: Variant::Classic,
            collider_policy: ColliderPolicy::MarkConflicts,
            resolution: Resolution::None,
            alpha: 0.05,
            variable_order: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCause {
    Collider {
        x: NodeId,
        y: NodeId,
        z: NodeId,
    },
    MeekRule(u8),
    Resolution,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventOutcome {
    Applied,
    ConflictFlagged,
    Overwritten,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientationEvent {
    pub from: NodeId,
    pub to: NodeId,
    pub cause: EventCause,
    pub outcome: EventOutcome,
}

pub type SepSets = BTreeMap<(NodeId, NodeId), BTreeSet<NodeId>>;

#[derive(Debug)]
pub struct DiscoveryResult {
    pub graph: MixedGraph,
    pub ledger: TestLedger,
    pub sepsets: SepSets,
    pub events: Vec<OrientationEvent>,
    pub config: RunConfig,
    /// Highest conditioning-set size actually tested during the skeleton
    /// phase; bounds the ambiguity search.
    pub max_k: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Ci(#[from] CiError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("missing sepset for unshielded pair ({0}, {1})")]
    MissingSepset(NodeId, NodeId),
    #[error("resolution None requested but conflicts/ambiguities remain")]
    Unresolved,
}

fn canon(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Rank of each node under the configured variable order; pools and subsets
/// are enumerated by ascending rank.
fn ranks(d: usize, cfg: &RunConfig) -> Vec<usize> {
    let mut rank = vec![0; d];
    match &cfg.variable_order {
        Some(order) => {
            assert_eq!(order.len(), d, "variable order must be a permutation");
            for (pos, &v) in order.iter().enumerate() {
                rank[v] = pos;
            }
        }
        None => {
            for (pos, r) in rank.iter_mut().enumerate() {
                *r = pos;
            }
        }
    }
    rank
}

fn by_rank(nodes: impl IntoIterator<Item = NodeId>, rank: &[usize]) -> Vec<NodeId> {
    let mut v: Vec<NodeId> = nodes.into_iter().collect();
    v.sort_by_key(|&n| rank[n]);
    v
}

/// Visit the k-subsets of `pool` in lexicographic order (of pool position),
/// stopping early when the callback returns true.
fn for_each_subset(pool: &[NodeId], k: usize, f: &mut impl FnMut(&[NodeId]) -> bool) -> bool {
    fn rec(
        pool: &[NodeId],
        k: usize,
        start: usize,
        cur: &mut Vec<NodeId>,
        f: &mut impl FnMut(&[NodeId]) -> bool,
    ) -> bool {
        if cur.len() == k {
            return f(cur);
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            if rec(pool, k, i + 1, cur, f) {
                cur.pop();
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(pool, k, 0, &mut Vec::new(), f)
}

// ---------------------------------------------------------------------------
// Skeleton
// ---------------------------------------------------------------------------

/// PC skeleton phase. For k = 0, 1, 2, ...: each still-adjacent pair is
/// visited once per level, with x the lower-rank endpoint; every k-subset of
/// adj(x) \ {y} (ascending rank) is tested, and the edge is deleted when any
/// subset separates, recording the first separating subset as the sepset.
/// The Stable variant freezes adjacency pools per level and defers edge
/// deletions to level end; Classic removes immediately and draws pools from
/// live adjacency.
pub fn pc_skeleton(
    tester: &dyn CiTester,
    d: usize,
    cfg: &RunConfig,
    ledger: &mut TestLedger,
) -> Result<(MixedGraph, SepSets, usize), DiscoveryError> {
    assert!(d >= 2, "need at least two nodes");
    let rank = ranks(d, cfg);
    let order = by_rank(0..d, &rank);
    let mut adj: Vec<BTreeSet<NodeId>> = (0..d)
        .map(|v| (0..d).filter(|&u| u != v).collect())
        .collect();
    let mut seps: SepSets = BTreeMap::new();
    let mut max_k = 0usize;
    let mut k = 0usize;
    loop {
        let mut any_pool_big_enough = false;
        let frozen: Vec<BTreeSet<NodeId>> = adj.clone();
        let mut removals: Vec<(NodeId, NodeId)> = Vec::new();
        for &x in &order {
            for &y in &by_rank(frozen[x].iter().copied(), &rank) {
                if rank[y] < rank[x] || !adj[x].contains(&y) {
                    continue;
                }
                let source = match cfg.variant {
                    Variant::Stable => &frozen[x],
                    Variant::Classic => &adj[x],
                };
                let pool: Vec<NodeId> =
                    by_rank(source.iter().copied().filter(|&v| v != y), &rank);
                if pool.len() < k {
                    continue;
                }
                any_pool_big_enough = true;
                let mut found: Option<BTreeSet<NodeId>> = None;
                let mut err: Option<CiError> = None;
                for_each_subset(&pool, k, &mut |s| {
                    let rec = match ledger.record(
                        tester,
                        CiTuple::new(x, y, s.iter().copied()),
                        Phase::Skeleton,
                    ) {
                        Ok(r) => r,
                        Err(e) => {
                            err = Some(e);
                            return true;
                        }
                    };
                    max_k = max_k.max(k);
                    if rec.independent() && found.is_none() {
                        found = Some(s.iter().copied().collect());
                    }
                    false
                });
                if let Some(e) = err {
                    return Err(e.into());
                }
                if let Some(s) = found {
                    seps.insert(canon(x, y), s);
                    match cfg.variant {
                        Variant::Stable => removals.push((x, y)),
                        Variant::Classic => {
                            adj[x].remove(&y);
                            adj[y].remove(&x);
                        }
                    }
                }
            }
        }
        for (x, y) in removals {
            adj[x].remove(&y);
            adj[y].remove(&x);
        }
        if !any_pool_big_enough {
            break;
        }
        k += 1;
    }
    let mut g = MixedGraph::new(d);
    for x in 0..d {
        for &y in &adj[x] {
            if x < y {
                g.add_undirected(x, y);
            }
        }
    }
    Ok((g, seps, max_k))
}

// ---------------------------------------------------------------------------
// Ambiguity decision
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TripleVerdict {
    Collider,
    NonCollider,
    Ambiguous,
}

/// Majority-style decision for the unshielded triple (x, y, z): enumerate
/// conditioning sets from adj(x) \ {z} and adj(z) \ {x} by ascending size
/// (bounded by the skeleton's reached k), seeding each size level with the
/// sepset recorded during the skeleton phase; stop at the first size with at
/// least one separating set. Collider if y is in no separating set,
/// NonCollider if in all, Ambiguous otherwise.
#[allow(clippy::too_many_arguments)]
pub fn decide_ambiguity(
    x: NodeId,
    y: NodeId,
    z: NodeId,
    tester: &dyn CiTester,
    skeleton: &MixedGraph,
    sepsets: &SepSets,
    cfg: &RunConfig,
    ledger: &mut TestLedger,
    max_k: usize,
) -> Result<(TripleVerdict, Vec<BTreeSet<NodeId>>), DiscoveryError> {
    let rank = ranks(skeleton.node_count(), cfg);
    let recorded = sepsets.get(&canon(x, z)).cloned();
    let pools: [Vec<NodeId>; 2] = [
        by_rank(skeleton.neighbors(x).into_iter().filter(|&v| v != z), &rank),
        by_rank(skeleton.neighbors(z).into_iter().filter(|&v| v != x), &rank),
    ];
    let size_limit = pools.iter().map(|p| p.len()).max().unwrap_or(0).min(max_k);
    let mut found: Vec<BTreeSet<NodeId>> = Vec::new();
    for k in 0..=size_limit {
        let mut seen: BTreeSet<CiTuple> = BTreeSet::new();
        if let Some(rec) = &recorded {
            if rec.len() == k {
                // The skeleton-phase separating set participates at its size.
                seen.insert(CiTuple::new(x, z, rec.iter().copied()));
                found.push(rec.clone());
            }
        }
        for pool in &pools {
            if pool.len() < k {
                continue;
            }
            let mut err: Option<CiError> = None;
            for_each_subset(pool, k, &mut |s| {
                let t = CiTuple::new(x, z, s.iter().copied());
                if !seen.insert(t.clone()) {
                    return false;
                }
                match ledger.record(tester, t, Phase::Orientation) {
                    Ok(rec) => {
                        if rec.independent() {
                            found.push(s.iter().copied().collect());
                        }
                        false
                    }
                    Err(e) => {
                        err = Some(e);
                        true
                    }
                }
            });
            if let Some(e) = err {
                return Err(e.into());
            }
        }
        if !found.is_empty() {
            break;
        }
    }
    let inside = found.iter().filter(|s| s.contains(&y)).count();
    let verdict = if found.is_empty() || inside == 0 {
        TripleVerdict::Collider
    } else if inside == found.len() {
        TripleVerdict::NonCollider
    } else {
        TripleVerdict::Ambiguous
    };
    Ok((verdict, found))
}

// ---------------------------------------------------------------------------
// Orientation
// ---------------------------------------------------------------------------

struct Orienter {
    g: MixedGraph,
    events: Vec<OrientationEvent>,
}

impl Orienter {
    /// Attempt to orient from -> to under the given policy.
    fn attempt(&mut self, from: NodeId, to: NodeId, cause: EventCause, policy: ColliderPolicy) {
        let outcome = if self.g.directed(from, to) {
            return; // already as wanted
        } else if self.g.directed(to, from) {
            match policy {
                ColliderPolicy::Overwrite => {
                    self.g.orient(from, to);
                    EventOutcome::Overwritten
                }
                // MarkConflicts and MajorityAmbiguity keep the earlier arrow.
                _ => {
                    self.g.flag_conflict(from, to);
                    EventOutcome::ConflictFlagged
                }
            }
        } else {
            self.g.orient(from, to);
            EventOutcome::Applied
        };
        self.events.push(OrientationEvent {
            from,
            to,
            cause,
            outcome,
        });
    }
}

/// Unshielded triples (x, y, z) grouped by middle node: y walks the variable
/// order, (x, z) pairs come from adj(y) in ascending rank with rank(x) <
/// rank(z). Orientation outcomes under keep-earlier policies depend on this
/// order, so it is part of the pinned convention.
fn triples_by_middle(skeleton: &MixedGraph, rank: &[usize]) -> Vec<(NodeId, NodeId, NodeId)> {
    let d = skeleton.node_count();
    let mut out = Vec::new();
    for &y in &by_rank(0..d, rank) {
        let nb = by_rank(skeleton.neighbors(y), rank);
        for i in 0..nb.len() {
            for j in i + 1..nb.len() {
                let (x, z) = (nb[i], nb[j]);
                if !skeleton.adjacent(x, z) {
                    out.push((x, y, z));
                }
            }
        }
    }
    out
}

/// Collider orientation phase over the undirected skeleton.
pub fn orient_colliders(
    skeleton: &MixedGraph,
    sepsets: &SepSets,
    cfg: &RunConfig,
    tester: &dyn CiTester,
    ledger: &mut TestLedger,
    max_k: usize,
) -> Result<(MixedGraph, Vec<OrientationEvent>), DiscoveryError> {
    let mut o = Orienter {
        g: skeleton.clone(),
        events: Vec::new(),
    };
    let rank = ranks(skeleton.node_count(), cfg);
    for (x, y, z) in triples_by_middle(skeleton, &rank) {
        let verdict = match cfg.collider_policy {
            ColliderPolicy::MajorityAmbiguity => {
                let (v, _) =
                    decide_ambiguity(x, y, z, tester, skeleton, sepsets, cfg, ledger, max_k)?;
                v
            }
            _ => {
                let s = sepsets
                    .get(&canon(x, z))
                    .ok_or(DiscoveryError::MissingSepset(x, z))?;
                if s.contains(&y) {
                    TripleVerdict::NonCollider
                } else {
                    TripleVerdict::Collider
                }
            }
        };
        match verdict {
            TripleVerdict::Collider => {
                let cause = EventCause::Collider { x, y, z };
                o.attempt(x, y, cause, cfg.collider_policy);
                o.attempt(z, y, cause, cfg.collider_policy);
            }
            TripleVerdict::NonCollider => {}
            TripleVerdict::Ambiguous => o.g.flag_ambiguous(x, y, z),
        }
    }
    Ok((o.g, o.events))
}

/// Meek rules R1-R4 in sweeps: each sweep evaluates every rule against the
/// graph as it stood at sweep start, collecting demands for edges still
/// undirected there, then applies them in deterministic edge order. Two
/// demands contradicting each other within one sweep (Example 3.1's pattern,
/// where R1 pushes from two colliders towards the middle) follow the collider
/// policy: flag-and-keep-first or overwrite. Every sweep with demands directs
/// at least one previously undirected edge, so the loop terminates.
pub fn meek_rules(g: &mut MixedGraph, cfg: &RunConfig, events: &mut Vec<OrientationEvent>) {
    let d = g.node_count();
    loop {
        let frozen = g.clone();
        let mut demands: Vec<(NodeId, NodeId)> = Vec::new();
        for ((a, b), mark) in frozen.edges() {
            if mark != crate::graph::EdgeMark::Undirected {
                continue;
            }
            for (u, v) in [(a, b), (b, a)] {
                if meek_applies(&frozen, d, u, v) {
                    demands.push((u, v));
                }
            }
        }
        if demands.is_empty() {
            break;
        }
        let mut o = Orienter {
            g: g.clone(),
            events: Vec::new(),
        };
        for (u, v) in demands {
            o.attempt(u, v, EventCause::MeekRule(0), cfg.collider_policy);
        }
        *g = o.g;
        events.extend(o.events);
    }
}

// ---------------------------------------------------------------------------
// Full run and resolution
// ---------------------------------------------------------------------------

/// Skeleton, collider orientation, then Meek rules; the ledger accumulates
/// across phases. Deterministic given (tester, cfg).
pub fn run_pc(
    tester: &dyn CiTester,
    d: usize,
    cfg: &RunConfig,
) -> Result<DiscoveryResult, DiscoveryError> {
    let mut ledger = TestLedger::new(cfg.alpha);
    let (skeleton, sepsets, max_k) = pc_skeleton(tester, d, cfg, &mut ledger)?;
    let (mut graph, mut events) =
        orient_colliders(&skeleton, &sepsets, cfg, tester, &mut ledger, max_k)?;
    meek_rules(&mut graph, cfg, &mut events);
    Ok(DiscoveryResult {
        graph,
        ledger,
        sepsets,
        events,
        config: cfg.clone(),
        max_k,
    })
}

/// Produce a flag-free graph from a discovery result. AsCollider and
/// AsNonCollider commit every ambiguous triple accordingly and rerun the Meek
/// closure; OrderFirst keeps the earliest orientation per edge; conflict
/// flags always resolve to the arrow currently on the edge (the earlier one
/// under MarkConflicts). None errors if any flag remains.
pub fn resolve(result: &DiscoveryResult, strategy: Resolution) -> Result<MixedGraph, DiscoveryError> {
    let mut g = result.graph.clone();
    match strategy {
        Resolution::None => {
            if !g.is_flag_free() {
                return Err(DiscoveryError::Unresolved);
            }
            Ok(g)
        }
        Resolution::AsCollider => {
            let triples: Vec<_> = g.ambiguous_triples().collect();
            for (x, y, z) in triples {
                g.orient(x, y);
                g.orient(z, y);
            }
            g.clear_flags();
            meek_closure(&mut g);
            Ok(g)
        }
        Resolution::AsNonCollider => {
            // Ambiguous triples stay unoriented; just drop the flags.
            g.clear_flags();
            meek_closure(&mut g);
            Ok(g)
        }
        Resolution::OrderFirst => {
            let mut first = g.skeleton();
            let mut oriented: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
            for ev in &result.events {
                let e = canon(ev.from, ev.to);
                if first.adjacent(ev.from, ev.to) && oriented.insert(e) {
                    first.orient(ev.from, ev.to);
                }
            }
            meek_closure(&mut first);
            Ok(first)
        }
    }
}

/// Distinct edges whose orientation was contested during a run (flagged or
/// overwritten); the "orientation conflicts" count of the paper's tables.
pub fn contested_edges(result: &DiscoveryResult) -> usize {
    let set: BTreeSet<(NodeId, NodeId)> = result
        .events
        .iter()
        .filter(|e| e.outcome != EventOutcome::Applied)
        .map(|e| canon(e.from, e.to))
        .collect();
    set.len()
}

impl DiscoveryResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "graph": self.graph.to_json(),
            "ledger": self.ledger.to_json(),
            "sepsets": self
                .sepsets
                .iter()
                .map(|(&(a, b), s)| serde_json::json!({
                    "x": a, "y": b, "s": s.iter().collect::<Vec<_>>()
                }))
                .collect::<Vec<_>>(),
            "events": serde_json::to_value(&self.events).unwrap(),
            "config": serde_json::to_value(&self.config).unwrap(),
        })
    }
}
