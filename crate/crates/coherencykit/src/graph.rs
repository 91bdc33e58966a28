//! Graph model and separation machinery: d-separation in DAGs, definite-status
//! path separation in PDAGs/CPDAGs, Markov equivalence, triple classification.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub type NodeId = usize;

/// Orientation of the edge stored under the canonical pair (a, b) with a < b.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMark {
    /// a -- b
    Undirected,
    /// a -> b
    Forward,
    /// a <- b
    Backward,
}

/// A conditional-independence statement (X, Y, S) in canonical form:
/// x < y and S sorted. Queries are symmetric in x and y.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CiTuple {
    pub x: NodeId,
    pub y: NodeId,
    pub s: Vec<NodeId>,
}

impl CiTuple {
    pub fn new(x: NodeId, y: NodeId, s: impl IntoIterator<Item = NodeId>) -> Self {
        assert_ne!(x, y, "CI tuple endpoints must differ");
        let (x, y) = if x < y { (x, y) } else { (y, x) };
        let mut s: Vec<NodeId> = s.into_iter().collect();
        s.sort_unstable();
        s.dedup();
        assert!(
            !s.contains(&x) && !s.contains(&y),
            "conditioning set may not contain the endpoints"
        );
        CiTuple { x, y, s }
    }
}

impl fmt::Display for CiTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {} | {:?})", self.x, self.y, self.s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("graph is not a DAG (undirected edge or directed cycle)")]
    NotADag,
    #[error("graph carries unresolved conflict or ambiguity flags")]
    Unresolved,
    #[error("node sets differ")]
    NodeMismatch,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Adjacency structure with per-edge marks, per-edge conflict flags and
/// per-triple ambiguity flags. Houses both G_true and G_out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedGraph {
    names: Vec<String>,
    /// Canonical pair (a < b) -> mark.
    marks: BTreeMap<(NodeId, NodeId), EdgeMark>,
    conflicts: BTreeSet<(NodeId, NodeId)>,
    /// (x, y, z) with x < z: unshielded triple x - y - z flagged ambiguous.
    ambiguous: BTreeSet<(NodeId, NodeId, NodeId)>,
}

fn pair(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl MixedGraph {
    pub fn new(d: usize) -> Self {
        Self::with_names((0..d).map(|i| format!("X{i}")).collect())
    }

    pub fn with_names(names: Vec<String>) -> Self {
        let mut seen = BTreeSet::new();
        for n in &names {
            assert!(seen.insert(n.clone()), "duplicate node name {n}");
        }
        MixedGraph {
            names,
            marks: BTreeMap::new(),
            conflicts: BTreeSet::new(),
            ambiguous: BTreeSet::new(),
        }
    }

    /// Complete undirected graph on d nodes; the PC starting point.
    pub fn complete(d: usize) -> Self {
        let mut g = Self::new(d);
        for a in 0..d {
            for b in a + 1..d {
                g.marks.insert((a, b), EdgeMark::Undirected);
            }
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn set_names(&mut self, names: Vec<String>) {
        assert_eq!(names.len(), self.names.len());
        self.names = names;
    }

    pub fn node_index(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.marks.contains_key(&pair(a, b))
    }

    pub fn mark(&self, a: NodeId, b: NodeId) -> Option<EdgeMark> {
        self.marks.get(&pair(a, b)).copied()
    }

    /// True iff the edge between a and b exists and is directed a -> b.
    pub fn directed(&self, a: NodeId, b: NodeId) -> bool {
        match self.marks.get(&pair(a, b)) {
            Some(EdgeMark::Forward) => a < b,
            Some(EdgeMark::Backward) => a > b,
            _ => false,
        }
    }

    pub fn undirected(&self, a: NodeId, b: NodeId) -> bool {
        self.marks.get(&pair(a, b)) == Some(&EdgeMark::Undirected)
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) {
        assert_ne!(a, b);
        self.marks.insert(pair(a, b), EdgeMark::Undirected);
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) {
        assert_ne!(from, to);
        let mark = if from < to {
            EdgeMark::Forward
        } else {
            EdgeMark::Backward
        };
        self.marks.insert(pair(from, to), mark);
    }

    /// Orient an existing edge as from -> to, overwriting any previous mark.
    pub fn orient(&mut self, from: NodeId, to: NodeId) {
        assert!(self.adjacent(from, to), "cannot orient a missing edge");
        self.add_directed(from, to);
    }

    pub fn remove_edge(&mut self, a: NodeId, b: NodeId) {
        self.marks.remove(&pair(a, b));
        self.conflicts.remove(&pair(a, b));
    }

    pub fn flag_conflict(&mut self, a: NodeId, b: NodeId) {
        assert!(self.adjacent(a, b), "conflict flag requires an edge");
        self.conflicts.insert(pair(a, b));
    }

    pub fn flag_ambiguous(&mut self, x: NodeId, y: NodeId, z: NodeId) {
        let (x, z) = if x < z { (x, z) } else { (z, x) };
        self.ambiguous.insert((x, y, z));
    }

    pub fn conflicts(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.conflicts.iter().copied()
    }

    pub fn ambiguous_triples(&self) -> impl Iterator<Item = (NodeId, NodeId, NodeId)> + '_ {
        self.ambiguous.iter().copied()
    }

    pub fn conflict_count(&self) -> usize {
        self.conflicts.len()
    }

    pub fn ambiguity_count(&self) -> usize {
        self.ambiguous.len()
    }

    pub fn clear_flags(&mut self) {
        self.conflicts.clear();
        self.ambiguous.clear();
    }

    pub fn is_flag_free(&self) -> bool {
        self.conflicts.is_empty() && self.ambiguous.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = ((NodeId, NodeId), EdgeMark)> + '_ {
        self.marks.iter().map(|(&e, &m)| (e, m))
    }

    pub fn edge_count(&self) -> usize {
        self.marks.len()
    }

    pub fn neighbors(&self, v: NodeId) -> BTreeSet<NodeId> {
        self.marks
            .keys()
            .filter_map(|&(a, b)| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn parents(&self, v: NodeId) -> BTreeSet<NodeId> {
        self.neighbors(v)
            .into_iter()
            .filter(|&u| self.directed(u, v))
            .collect()
    }

    pub fn children(&self, v: NodeId) -> BTreeSet<NodeId> {
        self.neighbors(v)
            .into_iter()
            .filter(|&u| self.directed(v, u))
            .collect()
    }

    pub fn is_dag(&self) -> bool {
        if self.marks.values().any(|&m| m == EdgeMark::Undirected) {
            return false;
        }
        // Kahn's algorithm over the directed edges.
        let d = self.node_count();
        let mut indeg = vec![0usize; d];
        for v in 0..d {
            indeg[v] = self.parents(v).len();
        }
        let mut queue: VecDeque<NodeId> =
            (0..d).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for c in self.children(v) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        seen == d
    }

    /// Ancestors of the nodes in `set` (inclusive), following directed edges only.
    pub fn ancestors_of(&self, set: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
        let mut an = set.clone();
        let mut queue: VecDeque<NodeId> = set.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for p in self.parents(v) {
                if an.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        an
    }

    /// All unshielded triples (x, y, z) with x < z, edges x-y and y-z present
    /// and x, z non-adjacent, in canonical order.
    pub fn unshielded_triples(&self) -> Vec<(NodeId, NodeId, NodeId)> {
        let d = self.node_count();
        let mut out = Vec::new();
        for y in 0..d {
            let nb: Vec<NodeId> = self.neighbors(y).into_iter().collect();
            for i in 0..nb.len() {
                for j in i + 1..nb.len() {
                    let (x, z) = (nb[i], nb[j]);
                    if !self.adjacent(x, z) {
                        out.push((x, y, z));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Skeleton copy: all marks undirected, flags dropped.
    pub fn skeleton(&self) -> MixedGraph {
        let mut g = MixedGraph::with_names(self.names.clone());
        for (&(a, b), _) in &self.marks {
            g.marks.insert((a, b), EdgeMark::Undirected);
        }
        g
    }
}

// ---------------------------------------------------------------------------
// Separation queries
// ---------------------------------------------------------------------------

impl MixedGraph {
    /// d-separation on a DAG via a Bayes-ball style reachability pass.
    pub fn d_separated(&self, t: &CiTuple) -> Result<bool, GraphError> {
        if !self.is_dag() {
            return Err(GraphError::NotADag);
        }
        let s: BTreeSet<NodeId> = t.s.iter().copied().collect();
        let an_s = self.ancestors_of(&s);
        // States: (node, arrived-moving-down). Down = along an edge parent -> node.
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        // Leaving the source in either direction.
        queue.push_back((t.x, true));
        queue.push_back((t.x, false));
        while let Some((v, down)) = queue.pop_front() {
            if !seen.insert((v, down)) {
                continue;
            }
            if v == t.y && v != t.x {
                return Ok(false);
            }
            if down {
                // Arrived via parent -> v.
                if !s.contains(&v) {
                    for c in self.children(v) {
                        queue.push_back((c, true));
                    }
                }
                if an_s.contains(&v) {
                    // v acts as an (ancestor-of-S) collider: bounce to parents.
                    for p in self.parents(v) {
                        queue.push_back((p, false));
                    }
                }
            } else {
                // Arrived via child -> v (moving up), or starting at the source.
                if !s.contains(&v) {
                    for p in self.parents(v) {
                        queue.push_back((p, false));
                    }
                    for c in self.children(v) {
                        queue.push_back((c, true));
                    }
                }
            }
        }
        Ok(true)
    }

    /// Brute-force d-separation oracle: enumerate all simple paths and apply
    /// the blocking criterion to each. Intended for cross-checks on small DAGs.
    pub fn d_separated_brute(&self, t: &CiTuple) -> Result<bool, GraphError> {
        if !self.is_dag() {
            return Err(GraphError::NotADag);
        }
        let s: BTreeSet<NodeId> = t.s.iter().copied().collect();
        let an_s = self.ancestors_of(&s);
        let open = |path: &[NodeId]| {
            path.windows(3).all(|w| {
                let (u, v, x) = (w[0], w[1], w[2]);
                let collider = self.directed(u, v) && self.directed(x, v);
                if collider {
                    an_s.contains(&v)
                } else {
                    !s.contains(&v)
                }
            })
        };
        let mut any_open = false;
        self.for_each_simple_path(t.x, t.y, &mut |path| {
            if open(path) {
                any_open = true;
            }
        });
        Ok(!any_open)
    }

    /// Separation by definite-status paths in a PDAG/CPDAG: true iff no
    /// definite-status path between x and y is d-connecting given S. On a DAG
    /// this coincides with `d_separated`. Requires a flag-free graph.
    pub fn pdag_separated(&self, t: &CiTuple) -> Result<bool, GraphError> {
        if !self.is_flag_free() {
            return Err(GraphError::Unresolved);
        }
        if self.adjacent(t.x, t.y) {
            return Ok(false);
        }
        let s: BTreeSet<NodeId> = t.s.iter().copied().collect();
        let an_s = self.ancestors_of(&s);
        let mut connected = false;
        self.for_each_simple_path(t.x, t.y, &mut |path| {
            if !connected && self.definite_status_open(path, &s, &an_s) {
                connected = true;
            }
        });
        Ok(!connected)
    }

    /// Dispatch: d-separation for DAGs, definite-status separation otherwise.
    /// Returns 1 iff separated (the indicator function of the paper's §2).
    pub fn separation_indicator(&self, t: &CiTuple) -> Result<u8, GraphError> {
        let sep = if self.is_dag() {
            self.d_separated(t)?
        } else {
            self.pdag_separated(t)?
        };
        Ok(u8::from(sep))
    }

    /// A path is open iff every internal node has definite status and does not
    /// block: definite colliders must be in An(S), definite non-colliders must
    /// avoid S. Undirected unshielded internal triples are definite
    /// non-colliders; a triple that could be either way has no definite status
    /// and disqualifies the path.
    fn definite_status_open(
        &self,
        path: &[NodeId],
        s: &BTreeSet<NodeId>,
        an_s: &BTreeSet<NodeId>,
    ) -> bool {
        path.windows(3).all(|w| {
            let (u, v, x) = (w[0], w[1], w[2]);
            let into_u = self.directed(u, v);
            let into_x = self.directed(x, v);
            if into_u && into_x {
                // Definite collider.
                an_s.contains(&v)
            } else if self.directed(v, u)
                || self.directed(v, x)
                || (self.undirected(u, v) && self.undirected(v, x) && !self.adjacent(u, x))
            {
                // Definite non-collider.
                !s.contains(&v)
            } else {
                // No definite status (e.g. u -> v - x with u, x adjacent).
                false
            }
        })
    }

    fn for_each_simple_path(&self, from: NodeId, to: NodeId, f: &mut impl FnMut(&[NodeId])) {
        let mut path = vec![from];
        let mut on_path = vec![false; self.node_count()];
        on_path[from] = true;
        self.path_dfs(to, &mut path, &mut on_path, f);
    }

    fn path_dfs(
        &self,
        to: NodeId,
        path: &mut Vec<NodeId>,
        on_path: &mut Vec<bool>,
        f: &mut impl FnMut(&[NodeId]),
    ) {
        let cur = *path.last().unwrap();
        for nb in self.neighbors(cur) {
            if on_path[nb] {
                continue;
            }
            path.push(nb);
            if nb == to {
                f(path);
            } else {
                on_path[nb] = true;
                self.path_dfs(to, path, on_path, f);
                on_path[nb] = false;
            }
            path.pop();
        }
    }

    /// Minimum edge count over paths from x to y containing no definite
    /// collider; None if every path has one (or no path exists).
    pub fn shortest_collider_free_path_length(&self, x: NodeId, y: NodeId) -> Option<usize> {
        if x == y {
            return Some(0);
        }
        let mut best: Option<usize> = None;
        self.for_each_simple_path(x, y, &mut |path| {
            let collider_free = path.windows(3).all(|w| {
                !(self.directed(w[0], w[1]) && self.directed(w[2], w[1]))
            });
            if collider_free {
                let len = path.len() - 1;
                best = Some(best.map_or(len, |b| b.min(len)));
            }
        });
        best
    }
}

// ---------------------------------------------------------------------------
// Markov equivalence and extensions
// ---------------------------------------------------------------------------

/// Verma–Pearl characterization: same skeleton and same unshielded colliders.
pub fn markov_equivalent(g1: &MixedGraph, g2: &MixedGraph) -> Result<bool, GraphError> {
    if g1.node_count() != g2.node_count() {
        return Err(GraphError::NodeMismatch);
    }
    if !g1.is_dag() || !g2.is_dag() {
        return Err(GraphError::NotADag);
    }
    let skel1: BTreeSet<_> = g1.marks.keys().copied().collect();
    let skel2: BTreeSet<_> = g2.marks.keys().copied().collect();
    Ok(skel1 == skel2 && unshielded_colliders(g1) == unshielded_colliders(g2))
}

fn unshielded_colliders(g: &MixedGraph) -> BTreeSet<(NodeId, NodeId, NodeId)> {
    g.unshielded_triples()
        .into_iter()
        .filter(|&(x, y, z)| g.directed(x, y) && g.directed(z, y))
        .collect()
}

/// The CPDAG of a DAG: skeleton plus v-structures, closed under Meek rules.
pub fn cpdag_of(dag: &MixedGraph) -> Result<MixedGraph, GraphError> {
    if !dag.is_dag() {
        return Err(GraphError::NotADag);
    }
    let mut g = dag.skeleton();
    for (x, y, z) in unshielded_colliders(dag) {
        g.orient(x, y);
        g.orient(z, y);
    }
    meek_closure(&mut g);
    Ok(g)
}

/// Plain Meek closure (R1-R4) used for CPDAG construction and resolution;
/// re-orientation of already directed edges is never attempted here.
pub fn meek_closure(g: &mut MixedGraph) {
    let d = g.node_count();
    loop {
        let mut changed = false;
        let undirected: Vec<(NodeId, NodeId)> = g
            .edges()
            .filter(|&(_, m)| m == EdgeMark::Undirected)
            .map(|(e, _)| e)
            .collect();
        for (a, b) in undirected {
            for (u, v) in [(a, b), (b, a)] {
                if !g.undirected(u, v) {
                    continue;
                }
                if meek_applies(g, d, u, v) {
                    g.orient(u, v);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// True iff some Meek rule demands the orientation u -> v.
pub(crate) fn meek_applies(g: &MixedGraph, d: usize, u: NodeId, v: NodeId) -> bool {
    // R1: w -> u, w and v non-adjacent.
    for w in 0..d {
        if w != u && w != v && g.directed(w, u) && !g.adjacent(w, v) {
            return true;
        }
    }
    // R2: u -> w -> v with u - v.
    for w in 0..d {
        if w != u && w != v && g.directed(u, w) && g.directed(w, v) {
            return true;
        }
    }
    // R3: u - w1 -> v and u - w2 -> v with w1, w2 non-adjacent.
    let ws: Vec<NodeId> = (0..d)
        .filter(|&w| w != u && w != v && g.undirected(u, w) && g.directed(w, v))
        .collect();
    for i in 0..ws.len() {
        for j in i + 1..ws.len() {
            if !g.adjacent(ws[i], ws[j]) {
                return true;
            }
        }
    }
    // R4: u - w, w -> t, t -> v, with u - t (or u adjacent to t) and w, v
    // non-adjacent.
    for w in 0..d {
        if w == u || w == v || !g.undirected(u, w) || g.adjacent(w, v) {
            continue;
        }
        for tt in 0..d {
            if tt != u && tt != v && tt != w && g.directed(w, tt) && g.directed(tt, v)
                && g.adjacent(u, tt)
            {
                return true;
            }
        }
    }
    false
}

/// All DAGs with the same skeleton that preserve every directed edge and
/// introduce no new unshielded collider. For CPDAG inputs this enumerates the
/// Markov equivalence class.
pub fn consistent_extensions(g: &MixedGraph) -> Vec<MixedGraph> {
    if !g.is_flag_free() {
        return Vec::new();
    }
    let undirected: Vec<(NodeId, NodeId)> = g
        .edges()
        .filter(|&(_, m)| m == EdgeMark::Undirected)
        .map(|(e, _)| e)
        .collect();
    let base_colliders = possible_colliders(g);
    let mut out = Vec::new();
    let mut cand = g.clone();
    extend_rec(&mut cand, &undirected, 0, &base_colliders, &mut out);
    out
}

/// First consistent DAG extension, if any.
pub fn consistent_dag_extension(g: &MixedGraph) -> Option<MixedGraph> {
    consistent_extensions(g).into_iter().next()
}

fn possible_colliders(g: &MixedGraph) -> BTreeSet<(NodeId, NodeId, NodeId)> {
    // Colliders already committed by directed edges; extensions must not add
    // to this set.
    g.unshielded_triples()
        .into_iter()
        .filter(|&(x, y, z)| g.directed(x, y) && g.directed(z, y))
        .collect()
}

fn extend_rec(
    cand: &mut MixedGraph,
    undirected: &[(NodeId, NodeId)],
    i: usize,
    base: &BTreeSet<(NodeId, NodeId, NodeId)>,
    out: &mut Vec<MixedGraph>,
) {
    if i == undirected.len() {
        if cand.is_dag() && &unshielded_colliders(cand) == base {
            out.push(cand.clone());
        }
        return;
    }
    let (a, b) = undirected[i];
    for (from, to) in [(a, b), (b, a)] {
        cand.orient(from, to);
        extend_rec(cand, undirected, i + 1, base, out);
    }
    cand.add_undirected(a, b);
}

/// Random DAG: edge i -> j with the given probability for every i < j, so the
/// node order is a topological order.
pub fn random_dag(d: usize, edge_prob: f64, rng: &mut impl Rng) -> MixedGraph {
    let mut g = MixedGraph::new(d);
    for i in 0..d {
        for j in i + 1..d {
            if rng.gen_bool(edge_prob) {
                g.add_directed(i, j);
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    a: String,
    b: String,
    mark: EdgeMark,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    nodes: Vec<String>,
    edges: Vec<EdgeJson>,
    conflicts: Vec<[String; 2]>,
    ambiguous: Vec<[String; 3]>,
}

impl MixedGraph {
    pub fn to_json(&self) -> serde_json::Value {
        let name = |i: NodeId| self.names[i].clone();
        let j = GraphJson {
            nodes: self.names.clone(),
            edges: self
                .marks
                .iter()
                .map(|(&(a, b), &mark)| EdgeJson {
                    a: name(a),
                    b: name(b),
                    mark,
                })
                .collect(),
            conflicts: self
                .conflicts
                .iter()
                .map(|&(a, b)| [name(a), name(b)])
                .collect(),
            ambiguous: self
                .ambiguous
                .iter()
                .map(|&(x, y, z)| [name(x), name(y), name(z)])
                .collect(),
        };
        serde_json::to_value(j).expect("graph serialization cannot fail")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, GraphError> {
        let j: GraphJson = serde_json::from_value(v.clone()).map_err(|e| GraphError::Parse {
            line: 0,
            msg: e.to_string(),
        })?;
        let names = j.nodes.clone();
        let mut g = MixedGraph::with_names(j.nodes);
        let idx = |n: &str| {
            names
                .iter()
                .position(|x| x == n)
                .ok_or_else(|| GraphError::Parse {
                    line: 0,
                    msg: format!("unknown node {n}"),
                })
        };
        for e in &j.edges {
            let (a, b) = (idx(&e.a)?, idx(&e.b)?);
            let (a, b, mark) = if a < b {
                (a, b, e.mark)
            } else {
                // Mirror the mark when the pair arrives reversed.
                let m = match e.mark {
                    EdgeMark::Forward => EdgeMark::Backward,
                    EdgeMark::Backward => EdgeMark::Forward,
                    EdgeMark::Undirected => EdgeMark::Undirected,
                };
                (b, a, m)
            };
            g.marks.insert((a, b), mark);
        }
        for [a, b] in &j.conflicts {
            let (a, b) = (idx(a)?, idx(b)?);
            g.conflicts.insert(pair(a, b));
        }
        for [x, y, z] in &j.ambiguous {
            let (x, y, z) = (idx(x)?, idx(y)?, idx(z)?);
            g.flag_ambiguous(x, y, z);
        }
        Ok(g)
    }

    /// Line-oriented fixture format: `A -> B`, `A -- B`. Node set is inferred
    /// from the edge lines in order of first appearance.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut names: Vec<String> = Vec::new();
        let mut edges: Vec<(String, String, bool)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let err = |msg: &str| GraphError::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            if parts.len() != 3 {
                return Err(err("expected `A -> B` or `A -- B`"));
            }
            let directed = match parts[1] {
                "->" => true,
                "--" => false,
                other => return Err(err(&format!("unknown edge operator {other}"))),
            };
            for n in [parts[0], parts[2]] {
                if !names.iter().any(|x| x == n) {
                    names.push(n.to_string());
                }
            }
            edges.push((parts[0].to_string(), parts[2].to_string(), directed));
        }
        let mut g = MixedGraph::with_names(names);
        for (a, b, directed) in edges {
            let (a, b) = (g.node_index(&a).unwrap(), g.node_index(&b).unwrap());
            if directed {
                g.add_directed(a, b);
            } else {
                g.add_undirected(a, b);
            }
        }
        Ok(g)
    }

    pub fn format_edge_list(&self) -> String {
        let mut out = String::new();
        for (&(a, b), &m) in &self.marks {
            let line = match m {
                EdgeMark::Undirected => format!("{} -- {}\n", self.names[a], self.names[b]),
                EdgeMark::Forward => format!("{} -> {}\n", self.names[a], self.names[b]),
                EdgeMark::Backward => format!("{} -> {}\n", self.names[b], self.names[a]),
            };
            out.push_str(&line);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain3() -> MixedGraph {
        let mut g = MixedGraph::new(3);
        g.add_directed(0, 1);
        g.add_directed(1, 2);
        g
    }

    fn collider3() -> MixedGraph {
        let mut g = MixedGraph::new(3);
        g.add_directed(0, 1);
        g.add_directed(2, 1);
        g
    }

    #[test]
    fn chain_blocked_by_middle() {
        let g = chain3();
        assert!(g.d_separated(&CiTuple::new(0, 2, [1])).unwrap());
        assert!(!g.d_separated(&CiTuple::new(0, 2, [])).unwrap());
    }

    #[test]
    fn collider_opened_by_conditioning() {
        let g = collider3();
        assert!(g.d_separated(&CiTuple::new(0, 2, [])).unwrap());
        assert!(!g.d_separated(&CiTuple::new(0, 2, [1])).unwrap());
    }

    #[test]
    fn collider_opened_by_descendant() {
        // 0 -> 1 <- 2, 1 -> 3: conditioning on the descendant opens the path.
        let mut g = MixedGraph::new(4);
        g.add_directed(0, 1);
        g.add_directed(2, 1);
        g.add_directed(1, 3);
        assert!(!g.d_separated(&CiTuple::new(0, 2, [3])).unwrap());
    }

    #[test]
    fn fig3_truth_separation() {
        // X -> Y, X -> Z, Z -> W, W -> Y; (Z, Y, {X, W}) separated.
        let mut g = MixedGraph::with_names(
            ["X", "Y", "Z", "W"].iter().map(|s| s.to_string()).collect(),
        );
        g.add_directed(0, 1);
        g.add_directed(0, 2);
        g.add_directed(2, 3);
        g.add_directed(3, 1);
        assert!(g.d_separated(&CiTuple::new(2, 1, [0, 3])).unwrap());
        assert!(g.d_separated(&CiTuple::new(3, 0, [2])).unwrap());
    }

    #[test]
    fn pdag_undirected_chain_connected() {
        let mut g = MixedGraph::new(3);
        g.add_undirected(0, 1);
        g.add_undirected(1, 2);
        assert!(!g.pdag_separated(&CiTuple::new(0, 2, [])).unwrap());
        assert!(g.pdag_separated(&CiTuple::new(0, 2, [1])).unwrap());
    }

    #[test]
    fn pdag_agrees_with_dag() {
        let g = chain3();
        for t in [
            CiTuple::new(0, 2, []),
            CiTuple::new(0, 2, [1]),
            CiTuple::new(0, 1, [2]),
        ] {
            assert_eq!(
                g.pdag_separated(&t).unwrap(),
                g.d_separated(&t).unwrap(),
                "{t}"
            );
        }
    }

    #[test]
    fn adjacent_never_separated() {
        let g = chain3();
        assert_eq!(g.separation_indicator(&CiTuple::new(0, 1, [2])).unwrap(), 0);
    }

    #[test]
    fn unresolved_graph_rejected() {
        let mut g = MixedGraph::new(3);
        g.add_undirected(0, 1);
        g.flag_conflict(0, 1);
        assert!(matches!(
            g.pdag_separated(&CiTuple::new(0, 2, [])),
            Err(GraphError::Unresolved)
        ));
    }

    #[test]
    fn markov_equivalence_verma_pearl() {
        let chain = chain3();
        let mut rev = MixedGraph::new(3);
        rev.add_directed(1, 0);
        rev.add_directed(2, 1);
        assert!(markov_equivalent(&chain, &rev).unwrap());
        assert!(!markov_equivalent(&chain, &collider3()).unwrap());
        assert!(markov_equivalent(&chain, &chain).unwrap());
    }

    #[test]
    fn cpdag_of_chain_and_collider() {
        let c = cpdag_of(&chain3()).unwrap();
        assert!(c.undirected(0, 1) && c.undirected(1, 2));
        let v = cpdag_of(&collider3()).unwrap();
        assert!(v.directed(0, 1) && v.directed(2, 1));
    }

    #[test]
    fn extension_forced_by_collider_avoidance() {
        // 0 -> 1 - 2 with 0, 2 non-adjacent: only 1 -> 2 avoids a new collider.
        let mut g = MixedGraph::new(3);
        g.add_directed(0, 1);
        g.add_undirected(1, 2);
        let exts = consistent_extensions(&g);
        assert_eq!(exts.len(), 1);
        assert!(exts[0].directed(1, 2));
    }

    #[test]
    fn undirected_four_cycle_has_no_extension() {
        let mut g = MixedGraph::new(4);
        for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            g.add_undirected(a, b);
        }
        assert!(consistent_dag_extension(&g).is_none());
    }

    #[test]
    fn collider_free_path_lengths() {
        let g = chain3();
        assert_eq!(g.shortest_collider_free_path_length(0, 1), Some(1));
        assert_eq!(g.shortest_collider_free_path_length(0, 2), Some(2));
        let v = collider3();
        assert_eq!(v.shortest_collider_free_path_length(0, 2), None);
    }

    #[test]
    fn edge_list_roundtrip() {
        let text = "X -> Y\nY -- Z\n";
        let g = MixedGraph::parse_edge_list(text).unwrap();
        assert_eq!(g.format_edge_list(), text);
        let bad = MixedGraph::parse_edge_list("X => Y");
        assert!(matches!(bad, Err(GraphError::Parse { line: 1, .. })));
    }

    #[test]
    fn json_roundtrip() {
        let mut g = MixedGraph::new(3);
        g.add_directed(0, 1);
        g.add_undirected(1, 2);
        g.flag_conflict(0, 1);
        g.flag_ambiguous(0, 1, 2);
        let back = MixedGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }
}
