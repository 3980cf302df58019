//! Hierarchical cuboidal dicing of the fusion network into bricks.
//!
//! Stage 0 bricks are single resource states. Each later stage doubles one
//! axis (x, y, z cyclically, skipping axes already at full size) until the
//! maximum brick is reached; a final stage fuses the maximum bricks together.
//! Bricks in z-layer `k` of maximum bricks are translated by `k * s` along x.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{Axis, Coord, FusionNetwork, OutcomeType, CHECK_WEIGHT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DicingError {
    #[error("brick dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("brick dimension {dim} does not divide lattice size {l}")]
    NotDividing { dim: usize, l: usize },
}

/// One of the six faces of a brick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub axis: Axis,
    pub positive: bool,
}

impl Face {
    /// Priority order `-x, +x, -y, +y, -z, +z`.
    pub const ALL: [Face; 6] = [
        Face { axis: Axis::X, positive: false },
        Face { axis: Axis::X, positive: true },
        Face { axis: Axis::Y, positive: false },
        Face { axis: Axis::Y, positive: true },
        Face { axis: Axis::Z, positive: false },
        Face { axis: Axis::Z, positive: true },
    ];

    pub fn index(self) -> usize {
        2 * self.axis.index() + usize::from(self.positive)
    }

    pub fn from_index(i: usize) -> Face {
        Face::ALL[i]
    }
}

/// A brick at one stage of the dicing.
#[derive(Debug, Clone)]
pub struct Brick {
    pub stage: usize,
    pub index: usize,
    pub origin: Coord,
    pub dims: [usize; 3],
    /// Member sites in brick-relative lexicographic order.
    pub sites: Vec<usize>,
    /// Internal fusions: both children's lists followed by `connecting`.
    pub fusions: Vec<usize>,
    /// The two previous-stage bricks, absent at stage 0.
    pub children: Option<[usize; 2]>,
    /// Fusions performed at this brick's stage, in increasing order.
    pub connecting: Vec<usize>,
}

impl Brick {
    pub fn num_outcomes(&self) -> usize {
        2 * self.fusions.len()
    }
}

/// Local outcome index inside a brick: `2 * local fusion + type`.
pub fn local_outcome(local_fusion: usize, kind: OutcomeType) -> usize {
    2 * local_fusion + kind.index()
}

/// Erasure and flip bits over a brick's local outcomes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErrorPattern {
    pub erased: Vec<bool>,
    pub flipped: Vec<bool>,
}

impl ErrorPattern {
    pub fn clean(outcomes: usize) -> Self {
        ErrorPattern { erased: vec![false; outcomes], flipped: vec![false; outcomes] }
    }

    pub fn len(&self) -> usize {
        self.erased.len()
    }

    pub fn is_empty(&self) -> bool {
        self.erased.is_empty()
    }

    /// Append another pattern (used when fusing child bricks).
    pub fn extend_from(&mut self, other: &ErrorPattern) {
        self.erased.extend_from_slice(&other.erased);
        self.flipped.extend_from_slice(&other.flipped);
    }
}

/// Outcome edge between two complete checks of a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViewEdge {
    pub outcome: usize,
    pub nodes: [usize; 2],
}

/// Outcome joining one complete check to an incomplete one, assigned to a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfEdge {
    pub outcome: usize,
    pub node: usize,
    pub face: Face,
}

/// Syndrome information a brick carries for one outcome type.
#[derive(Debug, Clone)]
pub struct TypeView {
    pub kind: OutcomeType,
    /// Global cell index of each complete check; position is the node id.
    pub complete_checks: Vec<usize>,
    /// Local outcomes of each complete check.
    pub check_outcomes: Vec<[usize; CHECK_WEIGHT]>,
    pub edges: Vec<ViewEdge>,
    pub half_edges: Vec<HalfEdge>,
    /// Internal outcomes with no complete endpoint check.
    pub untracked: Vec<usize>,
    /// Every internal outcome of this type.
    pub outcomes: Vec<usize>,
}

impl TypeView {
    pub fn num_checks(&self) -> usize {
        self.complete_checks.len()
    }

    /// Lit complete checks under the given flips.
    pub fn syndrome(&self, flipped: &[bool]) -> Vec<bool> {
        self.check_outcomes.iter().map(|outs| outs.iter().filter(|&&o| flipped[o]).count() % 2 == 1).collect()
    }

    /// Outcomes in the syndrome graph part of the view (edges, then half-edges).
    pub fn partial_outcomes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.half_edges.iter().map(|h| h.outcome).collect();
        v.extend_from_slice(&self.untracked);
        v.sort_unstable();
        v
    }
}

/// Per-type views of one brick.
#[derive(Debug, Clone)]
pub struct BrickView {
    pub primal: TypeView,
    pub dual: TypeView,
}

impl BrickView {
    pub fn of(&self, kind: OutcomeType) -> &TypeView {
        match kind {
            OutcomeType::Primal => &self.primal,
            OutcomeType::Dual => &self.dual,
        }
    }
}

/// Full dicing of an `L^3` network.
#[derive(Debug, Clone)]
pub struct DicingScheme {
    network: FusionNetwork,
    max_brick: [usize; 3],
    offset_step: usize,
    stages: Vec<[usize; 3]>,
    bricks: Vec<Vec<Brick>>,
    fusion_stage: Vec<usize>,
}

impl DicingScheme {
    /// Stage index used for fusions between maximum bricks.
    pub fn final_stage(&self) -> usize {
        self.stages.len()
    }

    pub fn network(&self) -> &FusionNetwork {
        &self.network
    }

    pub fn max_brick(&self) -> [usize; 3] {
        self.max_brick
    }

    pub fn offset_step(&self) -> usize {
        self.offset_step
    }

    /// Brick dimensions per stage, starting with `(1, 1, 1)`.
    pub fn stages(&self) -> &[[usize; 3]] {
        &self.stages
    }

    pub fn bricks(&self, stage: usize) -> &[Brick] {
        &self.bricks[stage]
    }

    pub fn max_bricks(&self) -> &[Brick] {
        self.bricks.last().unwrap()
    }

    pub fn last_stage(&self) -> usize {
        self.stages.len() - 1
    }

    /// Stage at which each fusion is performed.
    pub fn fusion_stages(&self) -> &[usize] {
        &self.fusion_stage
    }

    /// Fusions performed in the final all-fuse stage.
    pub fn final_fusions(&self) -> Vec<usize> {
        (0..self.fusion_stage.len()).filter(|&f| self.fusion_stage[f] == self.final_stage()).collect()
    }

    /// x-translation applied to the z-layer containing site coordinate `z`.
    pub fn layer_shift(&self, z: usize) -> usize {
        shift_for(z, self.max_brick, self.offset_step, self.network.size())
    }
}

fn shift_for(z: usize, max_brick: [usize; 3], step: usize, l: usize) -> usize {
    let k = z / max_brick[2];
    (k * step) % max_brick[0] % l
}

/// Stage dimension list from `(1,1,1)` to `max_brick`.
fn stage_dims(max_brick: [usize; 3]) -> Vec<[usize; 3]> {
    let mut dims = [1, 1, 1];
    let mut out = vec![dims];
    let mut axis = 0;
    while dims != max_brick {
        if dims[axis] < max_brick[axis] {
            dims[axis] *= 2;
            out.push(dims);
        }
        axis = (axis + 1) % 3;
    }
    out
}

/// Build the dicing for lattice size `l`.
pub fn build_cuboidal_dicing(
    network: &FusionNetwork,
    max_brick: [usize; 3],
    offset_step: usize,
) -> Result<DicingScheme, DicingError> {
    let l = network.size();
    for &d in &max_brick {
        if d == 0 || !d.is_power_of_two() {
            return Err(DicingError::NotPowerOfTwo(d));
        }
        if l % d != 0 {
            return Err(DicingError::NotDividing { dim: d, l });
        }
    }
    let stages = stage_dims(max_brick);
    let nsites = network.num_states();

    // Brick id of every site at every stage.
    let mut brick_of_site = vec![vec![0usize; nsites]; stages.len()];
    let mut bricks: Vec<Vec<Brick>> = Vec::with_capacity(stages.len());
    for (s, dims) in stages.iter().enumerate() {
        let counts = [l / dims[0], l / dims[1], l / dims[2]];
        let nbricks = counts[0] * counts[1] * counts[2];
        let mut stage_bricks: Vec<Brick> = (0..nbricks)
            .map(|index| {
                let bx = index / (counts[1] * counts[2]);
                let by = (index / counts[2]) % counts[1];
                let bz = index % counts[2];
                let z0 = bz * dims[2];
                let shift = shift_for(z0, max_brick, offset_step, l);
                Brick {
                    stage: s,
                    index,
                    origin: [(bx * dims[0] + shift) % l, by * dims[1], z0],
                    dims: *dims,
                    sites: Vec::with_capacity(dims[0] * dims[1] * dims[2]),
                    fusions: Vec::new(),
                    children: None,
                    connecting: Vec::new(),
                }
            })
            .collect();
        for b in stage_bricks.iter_mut() {
            for rx in 0..dims[0] {
                for ry in 0..dims[1] {
                    for rz in 0..dims[2] {
                        let c = [(b.origin[0] + rx) % l, b.origin[1] + ry, b.origin[2] + rz];
                        let site = network.site_index(c);
                        b.sites.push(site);
                        brick_of_site[s][site] = b.index;
                    }
                }
            }
        }
        bricks.push(stage_bricks);
    }

    let final_stage = stages.len();
    let mut fusion_stage = vec![final_stage; network.num_fusions()];
    for (f, stage) in fusion_stage.iter_mut().enumerate() {
        let (a, b) = network.fusion_endpoints(f);
        if let Some(s) = (0..stages.len()).find(|&s| brick_of_site[s][a] == brick_of_site[s][b]) {
            *stage = s;
        }
    }

    for s in 1..stages.len() {
        let axis = (0..3).find(|&a| stages[s][a] != stages[s - 1][a]).unwrap();
        let step = stages[s - 1][axis];
        for i in 0..bricks[s].len() {
            let origin = bricks[s][i].origin;
            let mut second = origin;
            second[axis] = (second[axis] + step) % l;
            let ca = brick_of_site[s - 1][network.site_index(origin)];
            let cb = brick_of_site[s - 1][network.site_index(second)];
            let mut connecting: Vec<usize> = Vec::new();
            for &site in &bricks[s][i].sites {
                for f in network.incident_fusions(site) {
                    let (u, _) = network.fusion_endpoints(f);
                    // each fusion is visited from its lower endpoint only
                    if u == site && fusion_stage[f] == s {
                        connecting.push(f);
                    }
                }
            }
            connecting.sort_unstable();
            connecting.dedup();
            let mut fusions = bricks[s - 1][ca].fusions.clone();
            fusions.extend_from_slice(&bricks[s - 1][cb].fusions);
            fusions.extend_from_slice(&connecting);
            let b = &mut bricks[s][i];
            b.children = Some([ca, cb]);
            b.connecting = connecting;
            b.fusions = fusions;
        }
    }

    Ok(DicingScheme { network: network.clone(), max_brick, offset_step, stages, bricks, fusion_stage })
}

/// Fusion → stage index map; final-stage fusions get `scheme.final_stage()`.
pub fn classify_fusions(scheme: &DicingScheme) -> &[usize] {
    scheme.fusion_stages()
}

/// Complete checks, edges, half-edges and face assignment of a brick.
pub fn brick_view(scheme: &DicingScheme, brick: &Brick) -> BrickView {
    BrickView { primal: type_view(scheme, brick, OutcomeType::Primal), dual: type_view(scheme, brick, OutcomeType::Dual) }
}

fn type_view(scheme: &DicingScheme, brick: &Brick, kind: OutcomeType) -> TypeView {
    let net = &scheme.network;
    let l = net.size();
    let local: HashMap<usize, usize> = brick.fusions.iter().enumerate().map(|(i, &f)| (f, i)).collect();

    let mut complete_checks = Vec::new();
    let mut check_outcomes = Vec::new();
    for &site in &brick.sites {
        let cell = net.cell_index(net.site_coord(site));
        if net.cell_parity(net.cell_coord(cell)) != kind.cell_parity() {
            continue;
        }
        let fusions = net.cell_fusions(cell);
        if fusions.iter().all(|f| local.contains_key(f)) {
            complete_checks.push(cell);
            check_outcomes.push(fusions.map(|f| local_outcome(local[&f], kind)));
        }
    }
    let node_of: HashMap<usize, usize> = complete_checks.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let mut edges = Vec::new();
    let mut half_edges = Vec::new();
    let mut untracked = Vec::new();
    let mut outcomes = Vec::with_capacity(brick.fusions.len());
    for (i, &f) in brick.fusions.iter().enumerate() {
        let outcome = local_outcome(i, kind);
        outcomes.push(outcome);
        let ends: Vec<usize> = net.outcome_checks(f, kind).iter().filter_map(|c| node_of.get(c).copied()).collect();
        match ends.len() {
            2 => edges.push(ViewEdge { outcome, nodes: [ends[0], ends[1]] }),
            1 => half_edges.push(HalfEdge { outcome, node: ends[0], face: nearest_face(net, brick, f, l) }),
            _ => untracked.push(outcome),
        }
    }
    TypeView { kind, complete_checks, check_outcomes, edges, half_edges, untracked, outcomes }
}

/// Face whose plane is nearest the fusion midpoint, in doubled coordinates.
fn nearest_face(net: &FusionNetwork, brick: &Brick, f: usize, l: usize) -> Face {
    let fu = net.fusion(f);
    let mut best = (usize::MAX, Face::ALL[0]);
    for face in Face::ALL {
        let a = face.axis.index();
        let rel = (fu.site[a] + l - brick.origin[a]) % l;
        let mid2 = 2 * rel + usize::from(fu.axis == face.axis);
        let dist = if face.positive { 2 * brick.dims[a] - 1 - mid2 } else { mid2 + 1 };
        if dist < best.0 {
            best = (dist, face);
        }
    }
    best.1
}

/// Views of every maximum brick.
pub fn max_brick_views(scheme: &DicingScheme) -> Vec<BrickView> {
    scheme.max_bricks().iter().map(|b| brick_view(scheme, b)).collect()
}

/// Number of outcomes per type that lie in a complete check of the maximum
/// brick containing them.
pub fn check_offset_balance(scheme: &DicingScheme) -> (usize, usize) {
    let mut counts = [0usize; 2];
    for brick in scheme.max_bricks() {
        let view = brick_view(scheme, brick);
        for kind in OutcomeType::ALL {
            let v = view.of(kind);
            let mut covered = vec![false; brick.num_outcomes()];
            for outs in &v.check_outcomes {
                for &o in outs {
                    covered[o] = true;
                }
            }
            counts[kind.index()] += covered.iter().filter(|&&c| c).count();
        }
    }
    (counts[0], counts[1])
}

/// Global outcome index of a brick's local outcome.
pub fn global_outcome(brick: &Brick, local: usize) -> usize {
    2 * brick.fusions[local / 2] + local % 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme(l: usize, max: [usize; 3], s: usize) -> DicingScheme {
        build_cuboidal_dicing(&FusionNetwork::new(l).unwrap(), max, s).unwrap()
    }

    #[test]
    fn stage_lists() {
        let d = scheme(8, [2, 2, 2], 0);
        assert_eq!(d.stages(), &[[1, 1, 1], [2, 1, 1], [2, 2, 1], [2, 2, 2]]);
        assert_eq!(d.final_stage(), 4);
        let d = scheme(8, [4, 4, 4], 0);
        assert_eq!(d.stages().len() + 1, 8);
        assert_eq!(stage_dims([4, 2, 1]), vec![[1, 1, 1], [2, 1, 1], [2, 2, 1], [4, 2, 1]]);
    }

    #[test]
    fn rejects_bad_bricks() {
        let net = FusionNetwork::new(6).unwrap();
        assert_eq!(
            build_cuboidal_dicing(&net, [4, 4, 4], 0).unwrap_err(),
            DicingError::NotDividing { dim: 4, l: 6 }
        );
        assert_eq!(build_cuboidal_dicing(&net, [3, 1, 1], 0).unwrap_err(), DicingError::NotPowerOfTwo(3));
    }

    #[test]
    fn partition_and_conservation() {
        for (l, max, s) in [(4, [2, 2, 2], 0), (8, [4, 4, 4], 1), (6, [2, 2, 2], 1), (8, [4, 2, 1], 3)] {
            let d = scheme(l, max, s);
            for stage in 0..d.stages().len() {
                let mut seen = vec![false; l * l * l];
                for b in d.bricks(stage) {
                    for &site in &b.sites {
                        assert!(!seen[site]);
                        seen[site] = true;
                    }
                }
                assert!(seen.iter().all(|&x| x));
            }
            let per_stage_total: usize = d.max_bricks().iter().map(|b| b.fusions.len()).sum::<usize>() + d.final_fusions().len();
            assert_eq!(per_stage_total, 3 * l * l * l);
        }
    }

    #[test]
    fn unit_bricks_mean_everything_is_final() {
        let d = scheme(4, [1, 1, 1], 0);
        assert_eq!(d.final_fusions().len(), 192);
        assert!(d.max_bricks().iter().all(|b| b.fusions.is_empty()));
        assert_eq!(check_offset_balance(&d), (0, 0));
        let v = brick_view(&d, &d.max_bricks()[0]);
        assert_eq!(v.primal.num_checks() + v.dual.num_checks(), 0);
        assert!(v.primal.outcomes.is_empty());
    }

    #[test]
    fn two_cube_l4_has_twelve_internal_fusions() {
        let d = scheme(4, [2, 2, 2], 0);
        for b in d.max_bricks() {
            assert_eq!(b.fusions.len(), 12);
            for &f in &b.fusions {
                assert!((1..=3).contains(&d.fusion_stages()[f]));
            }
        }
        assert_eq!(d.final_fusions().len(), 192 - 8 * 12);
    }

    #[test]
    fn two_cube_has_one_complete_check() {
        let d = scheme(8, [2, 2, 2], 0);
        let v = brick_view(&d, &d.max_bricks()[0]);
        assert_eq!((v.primal.num_checks(), v.dual.num_checks()), (1, 0));
        assert_eq!(v.primal.half_edges.len(), 12);
        assert!(v.primal.edges.is_empty());
        let (p, q) = check_offset_balance(&d);
        assert!(p > q);
        let d = scheme(8, [2, 2, 2], 1);
        let (p, q) = check_offset_balance(&d);
        assert_eq!(p, q);
    }

    #[test]
    fn four_cube_counts() {
        let d = scheme(8, [4, 4, 4], 0);
        let v = brick_view(&d, &d.max_bricks()[0]);
        assert_eq!((v.primal.num_checks(), v.dual.num_checks()), (14, 13));
        let (p, q) = check_offset_balance(&d);
        assert_ne!(p, q);
        let d = scheme(8, [4, 4, 4], 1);
        let (p, q) = check_offset_balance(&d);
        assert_eq!(p, q);
    }

    #[test]
    fn child_fusions_are_prefix() {
        let d = scheme(8, [4, 4, 4], 1);
        for s in 1..d.stages().len() {
            for b in d.bricks(s) {
                let [a, c] = b.children.unwrap();
                let fa = &d.bricks(s - 1)[a].fusions;
                let fc = &d.bricks(s - 1)[c].fusions;
                assert_eq!(&b.fusions[..fa.len()], &fa[..]);
                assert_eq!(&b.fusions[fa.len()..fa.len() + fc.len()], &fc[..]);
                let mut members = d.bricks(s - 1)[a].sites.clone();
                members.extend_from_slice(&d.bricks(s - 1)[c].sites);
                members.sort_unstable();
                let mut own = b.sites.clone();
                own.sort_unstable();
                assert_eq!(members, own);
            }
        }
    }

    #[test]
    fn completeness_grows_with_stage() {
        let d = scheme(8, [4, 4, 4], 1);
        for s in 1..d.stages().len() {
            for b in d.bricks(s) {
                let parent = brick_view(&d, b);
                for child in b.children.unwrap() {
                    let cv = brick_view(&d, &d.bricks(s - 1)[child]);
                    for kind in OutcomeType::ALL {
                        for c in &cv.of(kind).complete_checks {
                            assert!(parent.of(kind).complete_checks.contains(c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn half_edges_face_the_missing_check() {
        let d = scheme(8, [2, 2, 2], 0);
        let b = &d.max_bricks()[0];
        let v = brick_view(&d, b);
        let mut per_face = [0usize; 6];
        for h in &v.primal.half_edges {
            per_face[h.face.index()] += 1;
        }
        // every edge of the lone check ties between two faces; priority
        // sends x-edges to the y faces and y/z-edges to the x faces
        assert_eq!(per_face, [4, 4, 2, 2, 0, 0]);
    }
}
