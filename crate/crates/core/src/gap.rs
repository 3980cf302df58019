//! Logical gaps, frozen gaps and sector gaps.
//!
//! The logical gap is the weight difference between the best corrections in
//! the two logical sectors. The frozen gap first matches defects to each
//! other or to any brick face, discards ("freezes") the defects that went to
//! a non-gap face, and then takes the logical gap between the two gap faces,
//! penalised by the weight spent freezing.

use serde::Serialize;
use thiserror::Error;

use crate::dicing::{ErrorPattern, Face, TypeView};
use crate::lattice::Axis;
use crate::matching::{min_weight_join, DecodingGraph, MatchingError, ParityTargets, Partner, Reduction};
use crate::scalar::{Real, Weight};

/// Largest outcome count accepted by [`sector_weights`].
pub const SECTOR_MAX_OUTCOMES: usize = 20;
/// Largest number of pseudo-checks accepted by [`sector_weights`].
pub const SECTOR_MAX_LOGICALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GapError {
    #[error("no correction exists in either sector")]
    Infeasible,
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("exhaustive sector search limited to {max} outcomes, got {got}")]
    TooManyOutcomes { got: usize, max: usize },
    #[error("exhaustive sector search limited to {max} pseudo-checks, got {got}")]
    TooManyLogicals { got: usize, max: usize },
    #[error("syndrome has {got} bits, expected {expected}")]
    SyndromeLength { expected: usize, got: usize },
}

/// A gap that may be infinite (one sector has no correction at all).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GapValue<T> {
    Finite(T),
    Infinite,
}

impl<T: Copy> GapValue<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, GapValue::Infinite)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            GapValue::Finite(v) => Some(v),
            GapValue::Infinite => None,
        }
    }
}

impl<T: Weight> GapValue<T> {
    /// Value as `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        match self {
            GapValue::Finite(v) => v.to_f64().unwrap_or(f64::NAN),
            GapValue::Infinite => f64::INFINITY,
        }
    }
}

/// Gap faces (perpendicular to `axis`) and the four freezing faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapBoundarySpec {
    pub axis: Axis,
    pub gap_faces: [Face; 2],
    pub freeze_faces: [Face; 4],
}

impl GapBoundarySpec {
    pub fn new(axis: Axis) -> Self {
        let [a, b] = axis.others();
        let face = |axis, positive| Face { axis, positive };
        GapBoundarySpec {
            axis,
            gap_faces: [face(axis, false), face(axis, true)],
            freeze_faces: [face(a, false), face(a, true), face(b, false), face(b, true)],
        }
    }

    pub fn is_gap(&self, face: Face) -> bool {
        face.axis == self.axis
    }
}

/// Frozen-gap triple `(Δ, w, Δ_f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapResult<W, R> {
    pub delta: GapValue<W>,
    pub freeze_weight: W,
    pub frozen_delta: GapValue<R>,
}

/// `max(Δ − φw, 0)`, infinite when `Δ` is.
pub fn apply_freeze_penalty<W: Weight, R: Real>(delta: GapValue<W>, freeze_weight: W, phi: R) -> GapValue<R> {
    match delta {
        GapValue::Infinite => GapValue::Infinite,
        GapValue::Finite(d) => {
            let v = R::from_weight(d) - phi * R::from_weight(freeze_weight);
            GapValue::Finite(v.max(R::zero()))
        }
    }
}

/// Gap between the two sectors distinguished by the parity at boundary node
/// `sector_node`. All other boundary nodes stay free.
pub fn logical_gap<W: Weight>(
    g: &DecodingGraph<W>,
    defects: &[usize],
    sector_node: usize,
) -> Result<GapValue<W>, GapError> {
    let weights = sector_pair(g, defects, sector_node)?;
    match weights {
        [Some(a), Some(b)] => Ok(GapValue::Finite(a.distance_to(b))),
        [None, None] => Err(GapError::Infeasible),
        _ => Ok(GapValue::Infinite),
    }
}

/// Minimum correction weight with the parity at `sector_node` forced to 0 and 1.
pub fn sector_pair<W: Weight>(
    g: &DecodingGraph<W>,
    defects: &[usize],
    sector_node: usize,
) -> Result<[Option<W>; 2], GapError> {
    let mut out = [None, None];
    for (s, slot) in out.iter_mut().enumerate() {
        let mut targets = ParityTargets::from_defects(g, defects)?;
        targets.pin(sector_node, s == 1);
        *slot = match min_weight_join(g, &targets) {
            Ok(c) => Some(c.total_weight),
            Err(MatchingError::Infeasible) => None,
            Err(e) => return Err(e.into()),
        };
    }
    Ok(out)
}

/// Frozen gap on an explicit graph. `gap_nodes` are the two gap boundary
/// nodes; every other boundary node is a freezing boundary.
///
/// Step 1 minimises total matching weight and, among optima, the freezing
/// weight; a defect equally close to a gap and a freezing boundary goes to
/// the gap boundary. The lexicographic order is realised by scaling weights,
/// which is exact for integer weights.
pub fn frozen_gap_on_graph<W: Weight, R: Real>(
    g: &DecodingGraph<W>,
    defects: &[usize],
    gap_nodes: [usize; 2],
    phi: R,
) -> Result<GapResult<W, R>, GapError> {
    let (freeze_weight, remaining) = freeze_step(g, defects, gap_nodes)?;

    // Step 2: drop the freezing boundaries and their half-edges.
    let mut reduced = DecodingGraph::new(0, 0);
    for v in 0..g.num_nodes() {
        reduced.add_node(gap_nodes.contains(&v));
    }
    for e in 0..g.num_edges() {
        let [u, v] = g.edge(e);
        let frozen = |x: usize| g.is_boundary(x) && !gap_nodes.contains(&x);
        if frozen(u) || frozen(v) {
            continue;
        }
        let id = reduced.add_edge(u, v, g.weight(e))?;
        reduced.set_erased(id, g.is_erased(e));
    }
    let delta = logical_gap(&reduced, &remaining, gap_nodes[0])?;
    Ok(GapResult { delta, freeze_weight, frozen_delta: apply_freeze_penalty(delta, freeze_weight, phi) })
}

/// Freezing match. Returns `w` and the defects left for the gap step.
pub fn freeze_step<W: Weight>(
    g: &DecodingGraph<W>,
    defects: &[usize],
    gap_nodes: [usize; 2],
) -> Result<(W, Vec<usize>), GapError> {
    let targets = ParityTargets::from_defects(g, defects)?;
    let red = Reduction::uncontracted(g, &targets);
    let is_gap = |c: usize| (0..g.num_nodes()).any(|v| red.comp[v] == c && gap_nodes.contains(&v));
    let gap_comp: Vec<bool> = (0..red.ncomp).map(|c| red.comp_free[c] && is_gap(c)).collect();

    let nearest = |tree: &crate::matching::PathTree<W>, want_gap: bool| -> Option<(W, usize)> {
        let mut best: Option<usize> = None;
        for c in 0..red.ncomp {
            if red.comp_free[c] && gap_comp[c] == want_gap && tree.dist[c].is_some() && best.is_none_or(|b| tree.better(c, b))
            {
                best = Some(c);
            }
        }
        best.map(|c| (tree.dist[c].unwrap(), c))
    };

    // Scale so that any difference in total weight dominates every possible
    // difference in freezing weight.
    let defect_comps = red.defects();
    let mut scale = W::one();
    for &d in &defect_comps {
        let tree = red.shortest_paths(g, d);
        if let Some((df, _)) = nearest(&tree, false) {
            scale = scale + df;
        }
    }
    let pairing = red.pair(
        g,
        |d| d * scale,
        |tree| {
            let gap = nearest(tree, true).map(|(d, c)| (d * scale, c));
            let freeze = nearest(tree, false).map(|(d, c)| (d * scale + d, c));
            match (gap, freeze) {
                (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
                (a, b) => a.or(b),
            }
        },
    )?;

    let mut freeze_weight = W::zero();
    let mut cleared = vec![false; red.ncomp];
    for &(i, partner) in &pairing.pairs {
        if let Partner::Boundary(c) = partner {
            if !gap_comp[c] {
                freeze_weight = freeze_weight + pairing.trees[i].dist[c].unwrap();
                cleared[pairing.defects[i]] = true;
            }
        }
    }
    let mut target = targets.target.clone();
    for v in 0..g.num_nodes() {
        if cleared[red.comp[v]] {
            target[v] = false;
        }
    }
    let remaining = (0..g.num_nodes()).filter(|&v| target[v] && !g.is_boundary(v)).collect();
    Ok((freeze_weight, remaining))
}

/// Decoding graph of a brick view: complete checks, then one pseudo-node
/// per face in [`Face::ALL`] order. Every outcome has unit weight.
pub fn view_graph<W: Weight>(view: &TypeView, errors: &ErrorPattern) -> DecodingGraph<W> {
    let n = view.num_checks();
    let mut g = DecodingGraph::new(n, Face::ALL.len());
    for edge in &view.edges {
        let e = g.add_edge(edge.nodes[0], edge.nodes[1], W::one()).expect("view edge is valid");
        g.set_erased(e, errors.erased[edge.outcome]);
    }
    for h in &view.half_edges {
        let e = g.add_edge(h.node, n + h.face.index(), W::one()).expect("view half-edge is valid");
        g.set_erased(e, errors.erased[h.outcome]);
    }
    g
}

/// Frozen gap of one brick view along `spec.axis`.
pub fn frozen_gap<W: Weight, R: Real>(
    view: &TypeView,
    errors: &ErrorPattern,
    spec: GapBoundarySpec,
    phi: R,
) -> Result<GapResult<W, R>, GapError> {
    let g = view_graph::<W>(view, errors);
    let n = view.num_checks();
    let defects: Vec<usize> = view.syndrome(&errors.flipped).iter().enumerate().filter(|(_, &lit)| lit).map(|(i, _)| i).collect();
    frozen_gap_on_graph(&g, &defects, [n + spec.gap_faces[0].index(), n + spec.gap_faces[1].index()], phi)
}

/// Tanner graph with pseudo-checks, one per logical membrane.
#[derive(Debug, Clone)]
pub struct AugmentedTannerGraph<W> {
    pub num_checks: usize,
    /// Checks containing each outcome.
    pub outcome_checks: Vec<Vec<usize>>,
    pub weights: Vec<W>,
    /// Outcome support of each membrane.
    pub membranes: Vec<Vec<usize>>,
}

impl<W: Weight> AugmentedTannerGraph<W> {
    /// Tanner graph of a decoding graph: every non-boundary node is a check
    /// and every edge an outcome. Each entry of `sector_nodes` becomes a
    /// pseudo-check over the edges incident to that boundary node.
    pub fn from_graph(g: &DecodingGraph<W>, sector_nodes: &[usize]) -> Self {
        let checks: Vec<usize> = (0..g.num_nodes()).filter(|&v| !g.is_boundary(v)).collect();
        let mut check_id = vec![usize::MAX; g.num_nodes()];
        for (i, &v) in checks.iter().enumerate() {
            check_id[v] = i;
        }
        let outcome_checks = (0..g.num_edges())
            .map(|e| g.edge(e).iter().filter(|&&v| !g.is_boundary(v)).map(|&v| check_id[v]).collect())
            .collect();
        let weights = (0..g.num_edges()).map(|e| g.effective_weight(e)).collect();
        let membranes = sector_nodes.iter().map(|&b| g.incident_edges(b).to_vec()).collect();
        AugmentedTannerGraph { num_checks: checks.len(), outcome_checks, weights, membranes }
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcome_checks.len()
    }

    /// Tanner graph without its pseudo-checks.
    pub fn base(&self) -> AugmentedTannerGraph<W> {
        AugmentedTannerGraph { membranes: Vec::new(), ..self.clone() }
    }
}

/// Minimum correction weight for every pseudo-check assignment; index
/// bit `i` holds the value of pseudo-check `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorWeights<W> {
    pub k: usize,
    pub weights: Vec<Option<W>>,
}

/// Exhaustive sector weights for a syndrome over the base checks.
pub fn sector_weights<W: Weight>(atg: &AugmentedTannerGraph<W>, syndrome: &[bool]) -> Result<SectorWeights<W>, GapError> {
    let n = atg.num_outcomes();
    let k = atg.membranes.len();
    if n > SECTOR_MAX_OUTCOMES {
        return Err(GapError::TooManyOutcomes { got: n, max: SECTOR_MAX_OUTCOMES });
    }
    if k > SECTOR_MAX_LOGICALS {
        return Err(GapError::TooManyLogicals { got: k, max: SECTOR_MAX_LOGICALS });
    }
    if syndrome.len() != atg.num_checks {
        return Err(GapError::SyndromeLength { expected: atg.num_checks, got: syndrome.len() });
    }
    assert!(atg.num_checks <= 64, "sector search supports at most 64 checks");
    let mut check_mask = vec![0u64; n];
    let mut logical_mask = vec![0u64; n];
    for e in 0..n {
        for &c in &atg.outcome_checks[e] {
            check_mask[e] ^= 1 << c;
        }
    }
    for (i, m) in atg.membranes.iter().enumerate() {
        for &e in m {
            logical_mask[e] ^= 1 << i;
        }
    }
    let want = syndrome.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
    let mut weights: Vec<Option<W>> = vec![None; 1 << k];
    for subset in 0u64..1 << n {
        let mut synd = 0u64;
        let mut logical = 0u64;
        let mut w = W::zero();
        for e in 0..n {
            if subset >> e & 1 == 1 {
                synd ^= check_mask[e];
                logical ^= logical_mask[e];
                w = w + atg.weights[e];
            }
        }
        if synd == want {
            let slot = &mut weights[logical as usize];
            if slot.is_none_or(|b| w < b) {
                *slot = Some(w);
            }
        }
    }
    Ok(SectorWeights { k, weights })
}

/// `|w_min − w_flip(i)|`: the lightest sector against the lightest sector
/// disagreeing with it on pseudo-check `i`.
pub fn sector_gap<W: Weight>(sw: &SectorWeights<W>, i: usize) -> GapValue<W> {
    let mut best: Option<(W, usize)> = None;
    for (l, w) in sw.weights.iter().enumerate() {
        if let Some(w) = *w {
            if best.is_none_or(|(b, _)| w < b) {
                best = Some((w, l));
            }
        }
    }
    let Some((wmin, lmin)) = best else {
        return GapValue::Infinite;
    };
    let flipped = sw
        .weights
        .iter()
        .enumerate()
        .filter(|(l, _)| (l ^ lmin) >> i & 1 == 1)
        .filter_map(|(_, w)| *w)
        .fold(None, |acc: Option<W>, w| Some(acc.map_or(w, |a| a.min_of(w))));
    match flipped {
        Some(w) => GapValue::Finite(wmin.distance_to(w)),
        None => GapValue::Infinite,
    }
}
