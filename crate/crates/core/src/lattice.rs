//! The 6-ring fusion network on a periodic cubic lattice and its two
//! syndrome graphs.
//!
//! Resource states sit on the sites of an `L x L x L` torus and every lattice
//! edge is one fusion. A fusion measures `{XX, ZZ}` and so yields one primal
//! and one dual outcome. Unit cells are checkerboard coloured: the 12 edges
//! of an even cell form a primal check, the 12 edges of an odd cell a dual
//! check. Each lattice edge touches four cells, two of each colour, so every
//! outcome sits in exactly two checks of its own type.
//!
//! Indexing is fixed: fusions are ordered by `(x, y, z, axis)` and outcome
//! `2 f + t` is the outcome of type `t` (0 primal, 1 dual) of fusion `f`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of fusions touching a single check.
pub const CHECK_WEIGHT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("lattice size {0} must be even and at least 4")]
    InvalidSize(usize),
    #[error("bit-vector has length {got}, graph has {expected} edges")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Axis {
        Axis::ALL[i]
    }

    /// The two axes perpendicular to `self`, in increasing order.
    pub fn others(self) -> [Axis; 2] {
        match self {
            Axis::X => [Axis::Y, Axis::Z],
            Axis::Y => [Axis::X, Axis::Z],
            Axis::Z => [Axis::X, Axis::Y],
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(format!("unknown axis '{other}'")),
        }
    }
}

/// Which of the two syndrome graphs an outcome or check belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeType {
    Primal,
    Dual,
}

impl OutcomeType {
    pub const ALL: [OutcomeType; 2] = [OutcomeType::Primal, OutcomeType::Dual];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Checkerboard parity of the cells carrying checks of this type.
    pub fn cell_parity(self) -> usize {
        self.index()
    }

    pub fn of_parity(parity: usize) -> OutcomeType {
        OutcomeType::ALL[parity % 2]
    }
}

impl fmt::Display for OutcomeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeType::Primal => "primal",
            OutcomeType::Dual => "dual",
        })
    }
}

pub type Coord = [usize; 3];

/// A fusion is the lattice edge from `site` to `site + e_axis` (periodic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fusion {
    pub site: Coord,
    pub axis: Axis,
}

/// Identifies one measured outcome: `2 * fusion + type`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    pub fusion: usize,
    pub kind: OutcomeType,
}

impl Outcome {
    pub fn index(self) -> usize {
        2 * self.fusion + self.kind.index()
    }

    pub fn from_index(i: usize) -> Outcome {
        Outcome { fusion: i / 2, kind: OutcomeType::ALL[i % 2] }
    }
}

/// The 6-ring fusion network on an `L^3` torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FusionNetwork {
    l: usize,
}

impl FusionNetwork {
    pub fn new(l: usize) -> Result<Self, LatticeError> {
        if l < 4 || l % 2 != 0 {
            return Err(LatticeError::InvalidSize(l));
        }
        Ok(FusionNetwork { l })
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn num_states(&self) -> usize {
        self.l.pow(3)
    }

    pub fn num_fusions(&self) -> usize {
        3 * self.num_states()
    }

    pub fn num_outcomes(&self) -> usize {
        2 * self.num_fusions()
    }

    /// Number of unit cells, which equals the number of sites.
    pub fn num_cells(&self) -> usize {
        self.num_states()
    }

    pub fn site_index(&self, c: Coord) -> usize {
        (c[0] * self.l + c[1]) * self.l + c[2]
    }

    pub fn site_coord(&self, i: usize) -> Coord {
        let l = self.l;
        [i / (l * l), (i / l) % l, i % l]
    }

    /// Cells share the site numbering: cell `c` spans `[c, c + 1]` on every axis.
    pub fn cell_index(&self, c: Coord) -> usize {
        self.site_index(c)
    }

    pub fn cell_coord(&self, i: usize) -> Coord {
        self.site_coord(i)
    }

    pub fn cell_parity(&self, c: Coord) -> usize {
        (c[0] + c[1] + c[2]) % 2
    }

    pub fn fusion_index(&self, f: Fusion) -> usize {
        3 * self.site_index(f.site) + f.axis.index()
    }

    pub fn fusion(&self, i: usize) -> Fusion {
        Fusion { site: self.site_coord(i / 3), axis: Axis::from_index(i % 3) }
    }

    /// `c + delta` on the torus, per axis.
    pub fn shift(&self, c: Coord, delta: [isize; 3]) -> Coord {
        let l = self.l as isize;
        let mut out = [0; 3];
        for a in 0..3 {
            out[a] = (c[a] as isize + delta[a]).rem_euclid(l) as usize;
        }
        out
    }

    pub fn step(&self, c: Coord, axis: Axis) -> Coord {
        let mut d = [0; 3];
        d[axis.index()] = 1;
        self.shift(c, d)
    }

    /// Both endpoint sites of a fusion.
    pub fn fusion_endpoints(&self, f: usize) -> (usize, usize) {
        let fu = self.fusion(f);
        (self.site_index(fu.site), self.site_index(self.step(fu.site, fu.axis)))
    }

    /// Fusions incident to a site, ordered `-x, +x, -y, +y, -z, +z`.
    pub fn incident_fusions(&self, site: usize) -> [usize; 6] {
        let c = self.site_coord(site);
        let mut out = [0; 6];
        for axis in Axis::ALL {
            let mut back = [0isize; 3];
            back[axis.index()] = -1;
            let prev = self.shift(c, back);
            out[2 * axis.index()] = self.fusion_index(Fusion { site: prev, axis });
            out[2 * axis.index() + 1] = self.fusion_index(Fusion { site: c, axis });
        }
        out
    }

    /// The four cells sharing a lattice edge.
    pub fn cells_around(&self, f: usize) -> [usize; 4] {
        let fu = self.fusion(f);
        let [a, b] = fu.axis.others();
        let mut out = [0; 4];
        let mut k = 0;
        for da in [-1isize, 0] {
            for db in [-1isize, 0] {
                let mut d = [0isize; 3];
                d[a.index()] = da;
                d[b.index()] = db;
                out[k] = self.cell_index(self.shift(fu.site, d));
                k += 1;
            }
        }
        out
    }

    /// The two same-parity cells containing the outcome of the given type.
    pub fn outcome_checks(&self, f: usize, kind: OutcomeType) -> [usize; 2] {
        let mut out = [usize::MAX; 2];
        let mut k = 0;
        for cell in self.cells_around(f) {
            if self.cell_parity(self.cell_coord(cell)) == kind.cell_parity() {
                out[k] = cell;
                k += 1;
            }
        }
        debug_assert_eq!(k, 2);
        out
    }

    /// The 12 fusions on the edges of a unit cell.
    pub fn cell_fusions(&self, cell: usize) -> [usize; CHECK_WEIGHT] {
        let c = self.cell_coord(cell);
        let mut out = [0; CHECK_WEIGHT];
        let mut k = 0;
        for axis in Axis::ALL {
            let [a, b] = axis.others();
            for da in [0isize, 1] {
                for db in [0isize, 1] {
                    let mut d = [0isize; 3];
                    d[a.index()] = da;
                    d[b.index()] = db;
                    out[k] = self.fusion_index(Fusion { site: self.shift(c, d), axis });
                    k += 1;
                }
            }
        }
        out
    }
}

/// Syndrome graph of one outcome type: checks are nodes, outcomes are edges.
///
/// Edge `f` of either graph is the outcome of fusion `f`, so edge indices
/// coincide with fusion indices.
#[derive(Debug, Clone)]
pub struct SyndromeGraph {
    kind: OutcomeType,
    l: usize,
    /// Cell index of each check node.
    check_cells: Vec<usize>,
    /// Node index of each cell, `usize::MAX` for cells of the other colour.
    node_of_cell: Vec<usize>,
    edges: Vec<[usize; 2]>,
    node_edges: Vec<[usize; CHECK_WEIGHT]>,
    membranes: [Vec<usize>; 3],
    membrane_mask: [Vec<bool>; 3],
}

impl SyndromeGraph {
    pub fn build(net: &FusionNetwork, kind: OutcomeType) -> SyndromeGraph {
        let n_cells = net.num_cells();
        let mut check_cells = Vec::with_capacity(n_cells / 2);
        let mut node_of_cell = vec![usize::MAX; n_cells];
        for cell in 0..n_cells {
            if net.cell_parity(net.cell_coord(cell)) == kind.cell_parity() {
                node_of_cell[cell] = check_cells.len();
                check_cells.push(cell);
            }
        }
        let edges: Vec<[usize; 2]> = (0..net.num_fusions())
            .map(|f| {
                let [a, b] = net.outcome_checks(f, kind);
                [node_of_cell[a], node_of_cell[b]]
            })
            .collect();
        let node_edges = check_cells.iter().map(|&cell| net.cell_fusions(cell)).collect();

        let l = net.size();
        let membranes = Axis::ALL.map(|axis| {
            (0..net.num_fusions())
                .filter(|&f| {
                    let fu = net.fusion(f);
                    fu.axis != axis && fu.site[axis.index()] == 0
                })
                .collect::<Vec<_>>()
        });
        let membrane_mask = membranes.clone().map(|m| {
            let mut mask = vec![false; net.num_fusions()];
            for f in m {
                mask[f] = true;
            }
            mask
        });
        SyndromeGraph { kind, l, check_cells, node_of_cell, edges, node_edges, membranes, membrane_mask }
    }

    pub fn kind(&self) -> OutcomeType {
        self.kind
    }

    pub fn lattice_size(&self) -> usize {
        self.l
    }

    pub fn num_checks(&self) -> usize {
        self.check_cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn check_cell(&self, node: usize) -> usize {
        self.check_cells[node]
    }

    pub fn node_of_cell(&self, cell: usize) -> Option<usize> {
        let n = self.node_of_cell[cell];
        (n != usize::MAX).then_some(n)
    }

    /// Endpoints (check nodes) of an outcome edge.
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn incident_edges(&self, node: usize) -> &[usize; CHECK_WEIGHT] {
        &self.node_edges[node]
    }

    /// Outcome edges crossing the fixed plane through the site layer at
    /// coordinate 0 along `axis`.
    pub fn membrane(&self, axis: Axis) -> &[usize] {
        &self.membranes[axis.index()]
    }

    pub fn membrane_mask(&self, axis: Axis) -> &[bool] {
        &self.membrane_mask[axis.index()]
    }

    /// Parity of checks lit by a set of flipped outcomes.
    pub fn syndrome_of(&self, flips: &[bool]) -> Result<Vec<bool>, LatticeError> {
        if flips.len() != self.edges.len() {
            return Err(LatticeError::LengthMismatch { expected: self.edges.len(), got: flips.len() });
        }
        let mut syndrome = vec![false; self.check_cells.len()];
        for (e, _) in flips.iter().enumerate().filter(|(_, &b)| b) {
            let [a, b] = self.edges[e];
            syndrome[a] ^= true;
            syndrome[b] ^= true;
        }
        Ok(syndrome)
    }

    /// Crossing parity of an edge set with the membrane of `axis`.
    pub fn crossing_parity(&self, edges: &[bool], axis: Axis) -> bool {
        self.membranes[axis.index()].iter().fold(false, |acc, &e| acc ^ edges[e])
    }
}

/// Builds the primal and dual syndrome graphs of a network.
pub fn build_syndrome_graphs(net: &FusionNetwork) -> (SyndromeGraph, SyndromeGraph) {
    (SyndromeGraph::build(net, OutcomeType::Primal), SyndromeGraph::build(net, OutcomeType::Dual))
}
