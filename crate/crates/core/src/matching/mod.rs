//! Minimum-weight corrections on decoding graphs.
//!
//! A correction is an edge set whose boundary (odd-degree nodes, ignoring
//! boundary pseudo-nodes) is exactly the defect set. Erased edges are free.
//! The solver contracts erased components, runs Dijkstra from every defect,
//! solves a perfect matching on the defect graph (each defect also gets a
//! boundary twin when a pseudo-node is reachable) and lifts the matched
//! paths back onto the original edges.

mod blossom;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::scalar::Weight;

pub use blossom::{max_weight_matching, min_weight_perfect_matching};

/// Largest edge count accepted by [`brute_force_correction`].
pub const BRUTE_FORCE_MAX_EDGES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchingError {
    #[error("no correction exists for this defect set")]
    Infeasible,
    #[error("brute force limited to {max} edges, graph has {edges}")]
    TooLarge { edges: usize, max: usize },
    #[error("node {node} out of range for a graph with {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("edge {edge} has a negative weight")]
    NegativeWeight { edge: usize },
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
}

/// Graph of check nodes and boundary pseudo-nodes joined by weighted edges.
#[derive(Debug, Clone)]
pub struct DecodingGraph<W> {
    boundary: Vec<bool>,
    edges: Vec<[usize; 2]>,
    weights: Vec<W>,
    erased: Vec<bool>,
    adjacency: Vec<Vec<usize>>,
}

impl<W: Weight> DecodingGraph<W> {
    /// Empty graph with `checks` check nodes followed by `boundaries`
    /// pseudo-nodes.
    pub fn new(checks: usize, boundaries: usize) -> Self {
        let mut boundary = vec![false; checks];
        boundary.extend(std::iter::repeat_n(true, boundaries));
        let n = boundary.len();
        DecodingGraph { boundary, edges: Vec::new(), weights: Vec::new(), erased: Vec::new(), adjacency: vec![Vec::new(); n] }
    }

    pub fn add_node(&mut self, is_boundary: bool) -> usize {
        self.boundary.push(is_boundary);
        self.adjacency.push(Vec::new());
        self.boundary.len() - 1
    }

    pub fn add_edge(&mut self, u: usize, v: usize, weight: W) -> Result<usize, MatchingError> {
        let nodes = self.num_nodes();
        for node in [u, v] {
            if node >= nodes {
                return Err(MatchingError::NodeOutOfRange { node, nodes });
            }
        }
        if u == v {
            return Err(MatchingError::SelfLoop(u));
        }
        let e = self.edges.len();
        if weight.is_negative() {
            return Err(MatchingError::NegativeWeight { edge: e });
        }
        self.edges.push([u, v]);
        self.weights.push(weight);
        self.erased.push(false);
        self.adjacency[u].push(e);
        self.adjacency[v].push(e);
        Ok(e)
    }

    pub fn set_erased(&mut self, edge: usize, erased: bool) {
        self.erased[edge] = erased;
    }

    /// Replace the whole erasure mask.
    pub fn set_erasures(&mut self, erased: &[bool]) {
        assert_eq!(erased.len(), self.edges.len(), "erasure mask length");
        self.erased.copy_from_slice(erased);
    }

    pub fn num_nodes(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(|&v| self.boundary[v])
    }

    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn weight(&self, e: usize) -> W {
        self.weights[e]
    }

    /// Weight actually paid for using `e`: zero when erased.
    pub fn effective_weight(&self, e: usize) -> W {
        if self.erased[e] {
            W::zero()
        } else {
            self.weights[e]
        }
    }

    pub fn is_erased(&self, e: usize) -> bool {
        self.erased[e]
    }

    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Nodes with odd degree in `edges`, boundary pseudo-nodes excluded.
    pub fn defects_of(&self, edges: &[usize]) -> Vec<usize> {
        let mut parity = vec![false; self.num_nodes()];
        for &e in edges {
            for v in self.edges[e] {
                parity[v] ^= true;
            }
        }
        (0..self.num_nodes()).filter(|&v| parity[v] && !self.boundary[v]).collect()
    }

    /// Sum of effective weights over `edges`.
    pub fn weight_of(&self, edges: &[usize]) -> W {
        edges.iter().fold(W::zero(), |acc, &e| acc + self.effective_weight(e))
    }
}

/// Edge set with its total weight (erased edges contribute zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Correction<W> {
    pub edges: Vec<usize>,
    pub total_weight: W,
}

/// Parity requirements on every node of a graph.
///
/// `free` nodes accept any parity; every other node must end with odd
/// degree exactly when `target` is set. Ordinary decoding marks the
/// boundary pseudo-nodes free; sector-constrained decoding pins some of them.
#[derive(Debug, Clone)]
pub struct ParityTargets {
    pub target: Vec<bool>,
    pub free: Vec<bool>,
}

impl ParityTargets {
    pub fn from_defects<W: Weight>(g: &DecodingGraph<W>, defects: &[usize]) -> Result<Self, MatchingError> {
        let n = g.num_nodes();
        let mut target = vec![false; n];
        for &d in defects {
            if d >= n {
                return Err(MatchingError::NodeOutOfRange { node: d, nodes: n });
            }
            target[d] ^= true;
        }
        let free = (0..n).map(|v| g.is_boundary(v)).collect();
        Ok(ParityTargets { target, free })
    }

    /// Require boundary node `node` to end with parity `parity`.
    pub fn pin(&mut self, node: usize, parity: bool) {
        self.free[node] = false;
        self.target[node] = parity;
    }
}

/// Graph after contracting every connected component of erased edges.
#[derive(Debug, Clone)]
pub struct MergedGraph<W> {
    /// Contracted graph; a merged node is a boundary node when its
    /// component contains one.
    pub graph: DecodingGraph<W>,
    /// Merged nodes carrying odd defect parity (non-boundary only).
    pub defects: Vec<usize>,
    /// Merged node of each original node.
    pub component: Vec<usize>,
    /// Original edge of each merged edge.
    pub edge_origin: Vec<usize>,
}

/// Contract erased components and fold defect parity within each.
pub fn merge_erased<W: Weight>(g: &DecodingGraph<W>, defects: &[usize]) -> Result<MergedGraph<W>, MatchingError> {
    let targets = ParityTargets::from_defects(g, defects)?;
    let red = Reduction::new(g, &targets);
    let mut graph = DecodingGraph::new(0, 0);
    for c in 0..red.ncomp {
        graph.add_node(red.comp_free[c]);
    }
    let mut edge_origin = Vec::new();
    for (e, &[u, v]) in g.edges.iter().enumerate() {
        let (cu, cv) = (red.comp[u], red.comp[v]);
        if !g.erased[e] && cu != cv {
            graph.add_edge(cu, cv, g.weights[e])?;
            edge_origin.push(e);
        }
    }
    let defects = (0..red.ncomp).filter(|&c| red.comp_target[c] && !red.comp_free[c]).collect();
    Ok(MergedGraph { graph, defects, component: red.comp, edge_origin })
}

/// Minimum-weight correction for `defects`, boundary pseudo-nodes free.
pub fn min_weight_correction<W: Weight>(
    g: &DecodingGraph<W>,
    defects: &[usize],
) -> Result<Correction<W>, MatchingError> {
    let targets = ParityTargets::from_defects(g, defects)?;
    min_weight_join(g, &targets)
}

/// Minimum-weight edge set meeting arbitrary parity targets.
pub fn min_weight_join<W: Weight>(g: &DecodingGraph<W>, targets: &ParityTargets) -> Result<Correction<W>, MatchingError> {
    let red = Reduction::new(g, targets);
    let pairing = red.pair(g, |d| d, |tree| red.nearest_free(tree))?;
    Ok(red.lift(g, targets, &pairing))
}

/// All-pairs distances of a graph without boundary pseudo-nodes or
/// erasures, for repeated decoding on a fixed metric.
#[derive(Debug, Clone)]
pub struct DistanceTable<W> {
    n: usize,
    dist: Vec<Option<W>>,
}

impl<W: Weight> DistanceTable<W> {
    /// `None` when the graph has boundary pseudo-nodes.
    pub fn new(g: &DecodingGraph<W>) -> Option<Self> {
        if g.boundary_nodes().next().is_some() {
            return None;
        }
        let n = g.num_nodes();
        let mut dist = vec![None; n * n];
        let mut heap = BinaryHeap::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = Some(W::zero());
            heap.push(Entry { dist: W::zero(), hops: 0, node: s });
            while let Some(Entry { dist: d, hops, node }) = heap.pop() {
                if row[node].is_some_and(|old| d.cmp_weight(&old) == Ordering::Greater) {
                    continue;
                }
                for &e in &g.adjacency[node] {
                    let [a, b] = g.edges[e];
                    let next = if a == node { b } else { a };
                    let nd = d + g.weights[e];
                    if row[next].is_none_or(|old| nd.cmp_weight(&old) == Ordering::Less) {
                        row[next] = Some(nd);
                        heap.push(Entry { dist: nd, hops: hops + 1, node: next });
                    }
                }
            }
        }
        Some(DistanceTable { n, dist })
    }

    pub fn distance(&self, u: usize, v: usize) -> Option<W> {
        self.dist[u * self.n + v]
    }
}

/// [`min_weight_correction`] using precomputed distances. Falls back to the
/// general solver when `g` has erasures or zero-weight edges.
pub fn min_weight_correction_with_table<W: Weight>(
    g: &DecodingGraph<W>,
    table: &DistanceTable<W>,
    defects: &[usize],
) -> Result<Correction<W>, MatchingError> {
    let positive = (0..g.num_edges()).all(|e| !g.erased[e] && g.weights[e].cmp_weight(&W::zero()) == Ordering::Greater);
    if !positive || table.n != g.num_nodes() {
        return min_weight_correction(g, defects);
    }
    let targets = ParityTargets::from_defects(g, defects)?;
    let ds: Vec<usize> = (0..g.num_nodes()).filter(|&v| targets.target[v]).collect();
    let mut edges = Vec::new();
    for i in 0..ds.len() {
        for j in i + 1..ds.len() {
            if let Some(d) = table.distance(ds[i], ds[j]) {
                edges.push((i, j, d));
            }
        }
    }
    let mate = min_weight_perfect_matching(ds.len(), &edges).ok_or(MatchingError::Infeasible)?;
    let mut chosen = vec![false; g.num_edges()];
    for (i, &j) in mate.iter().enumerate() {
        if i < j {
            descend(g, table, ds[i], ds[j], &mut chosen);
        }
    }
    let edges: Vec<usize> = (0..g.num_edges()).filter(|&e| chosen[e]).collect();
    let total_weight = g.weight_of(&edges);
    Ok(Correction { edges, total_weight })
}

/// Toggle a shortest path from `u` to `v`, taking the lowest-index tight
/// edge at each step.
fn descend<W: Weight>(g: &DecodingGraph<W>, table: &DistanceTable<W>, mut u: usize, v: usize, chosen: &mut [bool]) {
    while u != v {
        let du = table.distance(u, v).expect("matched nodes are connected");
        let (e, next) = g.adjacency[u]
            .iter()
            .filter_map(|&e| {
                let [a, b] = g.edges[e];
                let x = if a == u { b } else { a };
                let dx = table.distance(x, v)?;
                ((dx + g.weights[e]).cmp_weight(&du) == Ordering::Equal).then_some((e, x))
            })
            .min()
            .expect("a tight edge leaves every node off the target");
        chosen[e] ^= true;
        u = next;
    }
}

/// Exhaustive minimum over all edge subsets.
pub fn brute_force_correction<W: Weight>(
    g: &DecodingGraph<W>,
    defects: &[usize],
) -> Result<Correction<W>, MatchingError> {
    let targets = ParityTargets::from_defects(g, defects)?;
    brute_force_join(g, &targets)
}

/// Exhaustive counterpart of [`min_weight_join`]. Among equal-weight
/// optima the first in Gray-code order wins.
pub fn brute_force_join<W: Weight>(g: &DecodingGraph<W>, targets: &ParityTargets) -> Result<Correction<W>, MatchingError> {
    let m = g.num_edges();
    if m > BRUTE_FORCE_MAX_EDGES {
        return Err(MatchingError::TooLarge { edges: m, max: BRUTE_FORCE_MAX_EDGES });
    }
    let n = g.num_nodes();
    let words = n.div_ceil(64).max(1);
    let mut edge_mask = vec![vec![0u64; words]; m];
    for (e, &[u, v]) in g.edges.iter().enumerate() {
        edge_mask[e][u / 64] ^= 1 << (u % 64);
        edge_mask[e][v / 64] ^= 1 << (v % 64);
    }
    let mut care = vec![0u64; words];
    let mut want = vec![0u64; words];
    for v in 0..n {
        if !targets.free[v] {
            care[v / 64] |= 1 << (v % 64);
            if targets.target[v] {
                want[v / 64] |= 1 << (v % 64);
            }
        }
    }
    let mut best: Option<(W, u32)> = None;
    let mut consider = |subset: u32| {
        let w = (0..m).filter(|&e| subset >> e & 1 == 1).fold(W::zero(), |acc, e| acc + g.effective_weight(e));
        if best.is_none_or(|(b, _)| w < b) {
            best = Some((w, subset));
        }
    };
    if words == 1 {
        let masks: Vec<u64> = edge_mask.iter().map(|m| m[0]).collect();
        let (care, want) = (care[0], want[0]);
        let mut parity = 0u64;
        let mut subset: u32 = 0;
        for step in 0..1u64 << m {
            if step > 0 {
                let bit = step.trailing_zeros() as usize;
                subset ^= 1 << bit;
                parity ^= masks[bit];
            }
            if parity & care == want {
                consider(subset);
            }
        }
        return finish(best, m);
    }
    let mut parity = vec![0u64; words];
    let mut subset: u32 = 0;
    for step in 0..1u64 << m {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            subset ^= 1 << bit;
            for (p, x) in parity.iter_mut().zip(&edge_mask[bit]) {
                *p ^= x;
            }
        }
        if parity.iter().zip(&care).zip(&want).all(|((p, c), w)| p & c == *w) {
            consider(subset);
        }
    }
    finish(best, m)
}

fn finish<W: Weight>(best: Option<(W, u32)>, m: usize) -> Result<Correction<W>, MatchingError> {
    let (total_weight, subset) = best.ok_or(MatchingError::Infeasible)?;
    let edges = (0..m).filter(|&e| subset >> e & 1 == 1).collect();
    Ok(Correction { edges, total_weight })
}

/// Heap entry for Dijkstra ordered by (distance, hops, node), smallest first.
struct Entry<W> {
    dist: W,
    hops: usize,
    node: usize,
}

impl<W: Weight> PartialEq for Entry<W> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<W: Weight> Eq for Entry<W> {}

impl<W: Weight> PartialOrd for Entry<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W: Weight> Ord for Entry<W> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .cmp_weight(&self.dist)
            .then(other.hops.cmp(&self.hops))
            .then(other.node.cmp(&self.node))
    }
}

/// Shortest-path tree on the contracted graph rooted at one defect.
pub(crate) struct PathTree<W> {
    pub dist: Vec<Option<W>>,
    hops: Vec<usize>,
    /// (previous component, original edge) on the path from the root.
    pred: Vec<(usize, usize)>,
}

impl<W: Weight> PathTree<W> {
    /// Shorter of two (distance, hops, node) keys.
    pub(crate) fn better(&self, a: usize, b: usize) -> bool {
        match (self.dist[a], self.dist[b]) {
            (Some(da), Some(db)) => (da, self.hops[a], a) < (db, self.hops[b], b),
            (Some(_), None) => true,
            _ => false,
        }
    }
}

/// How a defect was matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Partner {
    Defect(usize),
    /// Matched to the free component with this id.
    Boundary(usize),
}

pub(crate) struct Pairing<W> {
    /// Defect components, in increasing order.
    pub defects: Vec<usize>,
    pub trees: Vec<PathTree<W>>,
    /// `(i, partner)` with `i` indexing `defects`; defect partners are
    /// listed once with the smaller index first.
    pub pairs: Vec<(usize, Partner)>,
}

/// Erased components of a graph under given parity targets.
pub(crate) struct Reduction {
    pub comp: Vec<usize>,
    pub ncomp: usize,
    pub comp_free: Vec<bool>,
    pub comp_target: Vec<bool>,
    /// Non-erased edges between distinct components: (neighbour, edge).
    adj: Vec<Vec<(usize, usize)>>,
}

impl Reduction {
    pub fn new<W: Weight>(g: &DecodingGraph<W>, targets: &ParityTargets) -> Self {
        Self::build(g, targets, true)
    }

    /// Every node its own component; erased edges are ordinary zero-weight
    /// edges, so each defect is matched individually.
    pub fn uncontracted<W: Weight>(g: &DecodingGraph<W>, targets: &ParityTargets) -> Self {
        Self::build(g, targets, false)
    }

    fn build<W: Weight>(g: &DecodingGraph<W>, targets: &ParityTargets, contract: bool) -> Self {
        let n = g.num_nodes();
        let contracted: Vec<bool> = (0..g.num_edges()).map(|e| contract && g.erased[e]).collect();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (e, &[u, v]) in g.edges.iter().enumerate() {
            if contracted[e] {
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                    parent[hi] = lo;
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut ncomp = 0;
        let mut root_comp = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_comp[r] == usize::MAX {
                root_comp[r] = ncomp;
                ncomp += 1;
            }
            comp[v] = root_comp[r];
        }
        let mut comp_free = vec![false; ncomp];
        let mut comp_target = vec![false; ncomp];
        for v in 0..n {
            if targets.free[v] {
                comp_free[comp[v]] = true;
            } else if targets.target[v] {
                comp_target[comp[v]] ^= true;
            }
        }
        let mut adj = vec![Vec::new(); ncomp];
        for (e, &[u, v]) in g.edges.iter().enumerate() {
            let (cu, cv) = (comp[u], comp[v]);
            if !contracted[e] && cu != cv {
                adj[cu].push((cv, e));
                adj[cv].push((cu, e));
            }
        }
        Reduction { comp, ncomp, comp_free, comp_target, adj }
    }

    pub fn defects(&self) -> Vec<usize> {
        (0..self.ncomp).filter(|&c| self.comp_target[c] && !self.comp_free[c]).collect()
    }

    pub fn has_free(&self) -> bool {
        self.comp_free.iter().any(|&f| f)
    }

    /// Dijkstra from `source`; free components are reached but not crossed.
    pub fn shortest_paths<W: Weight>(&self, g: &DecodingGraph<W>, source: usize) -> PathTree<W> {
        let mut tree = PathTree {
            dist: vec![None; self.ncomp],
            hops: vec![usize::MAX; self.ncomp],
            pred: vec![(usize::MAX, usize::MAX); self.ncomp],
        };
        let mut done = vec![false; self.ncomp];
        let mut heap = BinaryHeap::new();
        tree.dist[source] = Some(W::zero());
        tree.hops[source] = 0;
        heap.push(Entry { dist: W::zero(), hops: 0, node: source });
        while let Some(Entry { dist, hops, node }) = heap.pop() {
            if done[node] {
                continue;
            }
            done[node] = true;
            if self.comp_free[node] && node != source {
                continue;
            }
            for &(next, e) in &self.adj[node] {
                if done[next] {
                    continue;
                }
                let nd = dist + g.effective_weight(e);
                let nh = hops + 1;
                let improves = match tree.dist[next] {
                    None => true,
                    Some(old) => match nd.cmp_weight(&old) {
                        Ordering::Less => true,
                        Ordering::Equal => nh < tree.hops[next] || (nh == tree.hops[next] && e < tree.pred[next].1),
                        Ordering::Greater => false,
                    },
                };
                if improves {
                    tree.dist[next] = Some(nd);
                    tree.hops[next] = nh;
                    tree.pred[next] = (node, e);
                    heap.push(Entry { dist: nd, hops: nh, node: next });
                }
            }
        }
        tree
    }

    /// Nearest free component by (distance, hops, index).
    pub fn nearest_free<W: Weight>(&self, tree: &PathTree<W>) -> Option<(W, usize)> {
        let mut best: Option<usize> = None;
        for c in 0..self.ncomp {
            if self.comp_free[c] && tree.dist[c].is_some() && best.is_none_or(|b| tree.better(c, b)) {
                best = Some(c);
            }
        }
        best.map(|c| (tree.dist[c].unwrap(), c))
    }

    /// Minimum-weight pairing of the defects. `pair_cost` maps a
    /// defect-defect distance to its matching cost; `boundary` returns the
    /// matching cost and target component for a defect's boundary twin.
    pub fn pair<W, P, B>(&self, g: &DecodingGraph<W>, pair_cost: P, boundary: B) -> Result<Pairing<W>, MatchingError>
    where
        W: Weight,
        P: Fn(W) -> W,
        B: Fn(&PathTree<W>) -> Option<(W, usize)>,
    {
        let defects = self.defects();
        let k = defects.len();
        let with_twins = self.has_free();
        if !with_twins && k % 2 == 1 {
            return Err(MatchingError::Infeasible);
        }
        let trees: Vec<PathTree<W>> = defects.iter().map(|&d| self.shortest_paths(g, d)).collect();
        if k == 0 {
            return Ok(Pairing { defects, trees, pairs: Vec::new() });
        }
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if let Some(d) = trees[i].dist[defects[j]] {
                    edges.push((i, j, pair_cost(d)));
                }
            }
        }
        let mut twin_target = vec![usize::MAX; k];
        if with_twins {
            for i in 0..k {
                if let Some((cost, c)) = boundary(&trees[i]) {
                    twin_target[i] = c;
                    edges.push((i, k + i, cost));
                }
            }
            for i in 0..k {
                for j in i + 1..k {
                    edges.push((k + i, k + j, W::zero()));
                }
            }
        }
        let nvert = if with_twins { 2 * k } else { k };
        let mate = min_weight_perfect_matching(nvert, &edges).ok_or(MatchingError::Infeasible)?;
        let mut pairs = Vec::new();
        for i in 0..k {
            let m = mate[i];
            if m < k {
                if i < m {
                    pairs.push((i, Partner::Defect(m)));
                }
            } else {
                debug_assert_eq!(m, k + i);
                pairs.push((i, Partner::Boundary(twin_target[i])));
            }
        }
        Ok(Pairing { defects, trees, pairs })
    }

    /// Original edges on the tree path from the root to `target`.
    pub fn path_edges<W>(&self, tree: &PathTree<W>, target: usize, out: &mut Vec<usize>) {
        let mut c = target;
        while tree.pred[c].0 != usize::MAX {
            out.push(tree.pred[c].1);
            c = tree.pred[c].0;
        }
    }

    /// Turn a pairing into an edge set on the original graph, completing
    /// parity inside erased components with erased edges.
    pub fn lift<W: Weight>(&self, g: &DecodingGraph<W>, targets: &ParityTargets, pairing: &Pairing<W>) -> Correction<W> {
        let mut chosen = vec![false; g.num_edges()];
        let mut path = Vec::new();
        for &(i, partner) in &pairing.pairs {
            path.clear();
            let end = match partner {
                Partner::Defect(j) => pairing.defects[j],
                Partner::Boundary(c) => c,
            };
            self.path_edges(&pairing.trees[i], end, &mut path);
            for &e in &path {
                chosen[e] ^= true;
            }
        }
        self.complete_in_components(g, targets, &mut chosen);
        let edges: Vec<usize> = (0..g.num_edges()).filter(|&e| chosen[e]).collect();
        let total_weight = g.weight_of(&edges);
        Correction { edges, total_weight }
    }

    /// Fix residual node parities using erased spanning forests. Each
    /// component is rooted at a free node when it has one.
    fn complete_in_components<W: Weight>(&self, g: &DecodingGraph<W>, targets: &ParityTargets, chosen: &mut [bool]) {
        let n = g.num_nodes();
        let mut mismatch = targets.target.clone();
        for (e, &[u, v]) in g.edges.iter().enumerate() {
            if chosen[e] {
                mismatch[u] ^= true;
                mismatch[v] ^= true;
            }
        }
        for v in 0..n {
            if targets.free[v] {
                mismatch[v] = false;
            }
        }
        let mut members = vec![Vec::new(); self.ncomp];
        for v in 0..n {
            members[self.comp[v]].push(v);
        }
        let mut visited = vec![false; n];
        let mut parent_edge = vec![usize::MAX; n];
        let mut order = Vec::new();
        for nodes in &members {
            if nodes.len() < 2 || !nodes.iter().any(|&v| mismatch[v]) {
                continue;
            }
            let root = nodes.iter().copied().find(|&v| targets.free[v]).unwrap_or(nodes[0]);
            order.clear();
            order.push(root);
            visited[root] = true;
            let mut head = 0;
            while head < order.len() {
                let u = order[head];
                head += 1;
                for &e in &g.adjacency[u] {
                    let [a, b] = g.edges[e];
                    if !g.erased[e] || self.comp[a] != self.comp[b] {
                        continue;
                    }
                    let w = if a == u { b } else { a };
                    if !visited[w] {
                        visited[w] = true;
                        parent_edge[w] = e;
                        order.push(w);
                    }
                }
            }
            for &v in order.iter().skip(1).rev() {
                if mismatch[v] && !targets.free[v] {
                    let e = parent_edge[v];
                    chosen[e] ^= true;
                    let [a, b] = g.edges[e];
                    let p = if a == v { b } else { a };
                    mismatch[v] = false;
                    if !targets.free[p] {
                        mismatch[p] ^= true;
                    }
                }
            }
            debug_assert!(!mismatch[root] || targets.free[root]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> DecodingGraph<i64> {
        let mut g = DecodingGraph::new(n, 0);
        for i in 0..n - 1 {
            g.add_edge(i, i + 1, 1).unwrap();
        }
        g
    }

    #[test]
    fn unit_edge_pair() {
        let g = path_graph(2);
        let c = min_weight_correction(&g, &[0, 1]).unwrap();
        assert_eq!(c, Correction { edges: vec![0], total_weight: 1 });
        assert_eq!(brute_force_correction(&g, &[0, 1]).unwrap().total_weight, 1);
    }

    #[test]
    fn erased_path_is_free() {
        let mut g = path_graph(4);
        for e in 0..3 {
            g.set_erased(e, true);
        }
        let c = min_weight_correction(&g, &[0, 3]).unwrap();
        assert_eq!(c.total_weight, 0);
        assert_eq!(c.edges, vec![0, 1, 2]);
    }

    #[test]
    fn empty_defects() {
        let g = path_graph(3);
        let c = brute_force_correction(&g, &[]).unwrap();
        assert!(c.edges.is_empty());
        assert_eq!(c.total_weight, 0);
        assert_eq!(min_weight_correction(&g, &[]).unwrap().total_weight, 0);
    }

    #[test]
    fn odd_defects_without_boundary_fail() {
        let g = path_graph(3);
        assert_eq!(min_weight_correction(&g, &[1]), Err(MatchingError::Infeasible));
        assert_eq!(brute_force_correction(&g, &[1]), Err(MatchingError::Infeasible));
    }

    #[test]
    fn boundary_absorbs_single_defect() {
        // 0 - 1 - 2 - B
        let mut g = DecodingGraph::new(3, 1);
        g.add_edge(0, 1, 1).unwrap();
        g.add_edge(1, 2, 1).unwrap();
        g.add_edge(2, 3, 1).unwrap();
        let c = min_weight_correction(&g, &[1]).unwrap();
        assert_eq!(c.total_weight, 2);
        assert_eq!(c.edges, vec![1, 2]);
        assert_eq!(g.defects_of(&c.edges), vec![1]);
    }

    #[test]
    fn pinned_boundary_forces_parity() {
        let mut g = DecodingGraph::new(2, 2);
        // B0 - 0 - 1 - B1
        g.add_edge(2, 0, 1).unwrap();
        g.add_edge(0, 1, 1).unwrap();
        g.add_edge(1, 3, 1).unwrap();
        let mut t = ParityTargets::from_defects(&g, &[]).unwrap();
        t.pin(2, true);
        assert_eq!(min_weight_join(&g, &t).unwrap().total_weight, 3);
        assert_eq!(brute_force_join(&g, &t).unwrap().total_weight, 3);
    }

    #[test]
    fn merge_fold_parity() {
        let mut g = DecodingGraph::<i64>::new(4, 0);
        g.add_edge(0, 1, 1).unwrap();
        g.add_edge(1, 2, 1).unwrap();
        g.add_edge(2, 0, 1).unwrap();
        g.add_edge(2, 3, 1).unwrap();
        let m = merge_erased(&g, &[0, 3]).unwrap();
        assert_eq!(m.graph.num_nodes(), 4);
        assert_eq!(m.defects, vec![0, 3]);

        for e in 0..3 {
            g.set_erased(e, true);
        }
        let m = merge_erased(&g, &[0]).unwrap();
        assert_eq!(m.graph.num_nodes(), 2);
        assert_eq!(m.defects, vec![0]);
        assert_eq!(m.graph.num_edges(), 1);

        let mut g = path_graph(3);
        g.set_erased(0, true);
        let m = merge_erased(&g, &[0, 1]).unwrap();
        assert!(m.defects.is_empty());
        assert_eq!(m.component[0], m.component[1]);
    }

    #[test]
    fn erased_component_parity_is_completed() {
        // defect at 0 inside an erased star reaching a weighted edge to 4
        let mut g = DecodingGraph::<i64>::new(5, 0);
        for v in 1..4 {
            let e = g.add_edge(0, v, 3).unwrap();
            g.set_erased(e, true);
        }
        g.add_edge(3, 4, 2).unwrap();
        let c = min_weight_correction(&g, &[0, 4]).unwrap();
        assert_eq!(c.total_weight, 2);
        assert_eq!(g.defects_of(&c.edges), vec![0, 4]);
    }

    #[test]
    fn float_weights_match_brute_force() {
        let mut g = DecodingGraph::<f64>::new(4, 1);
        g.add_edge(0, 1, 0.5).unwrap();
        g.add_edge(1, 2, 1.25).unwrap();
        g.add_edge(2, 3, 0.75).unwrap();
        g.add_edge(3, 0, 2.0).unwrap();
        g.add_edge(0, 4, 0.6).unwrap();
        g.add_edge(2, 4, 0.3).unwrap();
        for defects in [vec![0, 2], vec![1], vec![0, 1, 2, 3], vec![3]] {
            let a = min_weight_correction(&g, &defects).unwrap();
            let b = brute_force_correction(&g, &defects).unwrap();
            assert!((a.total_weight - b.total_weight).abs() < 1e-12, "{defects:?}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut g = DecodingGraph::<i64>::new(2, 0);
        assert!(matches!(g.add_edge(0, 5, 1), Err(MatchingError::NodeOutOfRange { .. })));
        assert!(matches!(g.add_edge(0, 1, -1), Err(MatchingError::NegativeWeight { .. })));
        assert!(matches!(g.add_edge(1, 1, 1), Err(MatchingError::SelfLoop(1))));
        let mut big = DecodingGraph::<i64>::new(26, 0);
        for i in 0..25 {
            big.add_edge(i, i + 1, 1).unwrap();
        }
        assert!(matches!(brute_force_correction(&big, &[]), Err(MatchingError::TooLarge { .. })));
    }
}
