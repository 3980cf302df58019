//! Brick quality scores and ranking of copies.
//!
//! Higher scores mean better bricks. The count score penalises erasures and
//! lit (merged) complete checks exponentially; the gap score penalises small
//! frozen gaps along each axis of both syndrome graphs.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicing::{BrickView, ErrorPattern, TypeView};
use crate::gap::{frozen_gap, GapBoundarySpec, GapResult, GapValue};
use crate::lattice::{Axis, OutcomeType};
use crate::scalar::{Real, Weight};

/// Exponent above which the count score switches to log-sum-exp form.
pub const DEFAULT_EXP_CAP: f64 = 600.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoringError {
    #[error("parameter grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Count,
    Gap,
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(ScorerKind::Count),
            "gap" => Ok(ScorerKind::Gap),
            other => Err(format!("unknown scorer '{other}' (expected count or gap)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountParams<R> {
    pub alpha: R,
    pub beta: R,
    /// Exponents above this use the log-sum-exp path.
    pub exp_cap: R,
}

impl<R: Real> CountParams<R> {
    pub fn new(alpha: R, beta: R) -> Self {
        CountParams { alpha, beta, exp_cap: R::from_f64(DEFAULT_EXP_CAP) }
    }
}

impl<R: Real> Default for CountParams<R> {
    fn default() -> Self {
        CountParams::new(R::one(), R::from_f64(2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapParams<R> {
    pub delta_coef: R,
    pub phi: R,
}

impl<R: Real> Default for GapParams<R> {
    fn default() -> Self {
        GapParams { delta_coef: R::one(), phi: R::from_f64(0.5) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scorer<R> {
    Count(CountParams<R>),
    Gap(GapParams<R>),
}

impl<R: Real> Scorer<R> {
    pub fn kind(&self) -> ScorerKind {
        match self {
            Scorer::Count(_) => ScorerKind::Count,
            Scorer::Gap(_) => ScorerKind::Gap,
        }
    }

    /// Score a brick; `W` is the edge-weight type used by the gap scorer.
    pub fn score<W: Weight>(&self, view: &BrickView, errors: &ErrorPattern) -> Score<R> {
        match self {
            Scorer::Count(p) => count_score(view, errors, p),
            Scorer::Gap(p) => gap_score::<W, R>(view, errors, p),
        }
    }
}

/// A score with a ranking key. `key` is a strictly increasing function of
/// `value` that stays finite when `value` overflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score<R> {
    pub value: R,
    pub key: R,
}

impl<R: Real> Score<R> {
    /// Score whose key is the value itself.
    pub fn plain(value: R) -> Self {
        Score { value, key: value }
    }
}

/// `(‖e_G‖₁, ‖c_G‖₁)` for one syndrome graph: erased internal outcomes and
/// lit merged checks. Merged checks joined to a face by an erasure are not
/// counted.
pub fn count_tallies(view: &TypeView, errors: &ErrorPattern) -> (usize, usize) {
    let erased = view.outcomes.iter().filter(|&&o| errors.erased[o]).count();
    let n = view.num_checks();
    if n == 0 {
        return (erased, 0);
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in &view.edges {
        if errors.erased[e.outcome] {
            let (a, b) = (find(&mut parent, e.nodes[0]), find(&mut parent, e.nodes[1]));
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut open = vec![false; n];
    for h in &view.half_edges {
        if errors.erased[h.outcome] {
            let r = find(&mut parent, h.node);
            open[r] = true;
        }
    }
    let mut parity = vec![false; n];
    for (i, lit) in view.syndrome(&errors.flipped).into_iter().enumerate() {
        if lit {
            let r = find(&mut parent, i);
            parity[r] ^= true;
        }
    }
    let lit = (0..n).filter(|&r| parent[r] == r && parity[r] && !open[r]).count();
    (erased, lit)
}

/// `−Σ_G exp(α‖e_G‖₁ + β‖c_G‖₁)` over the primal and dual graphs.
pub fn count_score<R: Real>(view: &BrickView, errors: &ErrorPattern, p: &CountParams<R>) -> Score<R> {
    let exps: Vec<R> = OutcomeType::ALL
        .iter()
        .map(|&k| {
            let (e, c) = count_tallies(view.of(k), errors);
            p.alpha * R::from_f64(e as f64) + p.beta * R::from_f64(c as f64)
        })
        .collect();
    score_from_exponents(&exps, p.exp_cap)
}

/// `−Σ exp(x_i)`, falling back to log-sum-exp above `cap`.
pub fn score_from_exponents<R: Real>(exps: &[R], cap: R) -> Score<R> {
    let m = exps.iter().copied().fold(R::neg_infinity(), R::max);
    if m <= cap {
        let sum = exps.iter().fold(R::zero(), |acc, &x| acc + x.exp());
        Score { value: -sum, key: -sum.ln() }
    } else {
        let lse = m + exps.iter().fold(R::zero(), |acc, &x| acc + (x - m).exp()).ln();
        Score { value: -lse.exp(), key: -lse }
    }
}

/// Frozen gaps for both types and all three axes, indexed `[type][axis]`.
/// A configuration with no valid freezing match counts as zero gap.
pub fn frozen_gaps<W: Weight, R: Real>(view: &BrickView, errors: &ErrorPattern, phi: R) -> [[GapResult<W, R>; 3]; 2] {
    OutcomeType::ALL.map(|k| {
        Axis::ALL.map(|axis| {
            frozen_gap::<W, R>(view.of(k), errors, GapBoundarySpec::new(axis), phi).unwrap_or(GapResult {
                delta: GapValue::Finite(W::zero()),
                freeze_weight: W::zero(),
                frozen_delta: GapValue::Finite(R::zero()),
            })
        })
    })
}

/// `−Σ_i e^{−δ Δ_f(i)}` over the six frozen gaps; infinite gaps add 0.
pub fn gap_score<W: Weight, R: Real>(view: &BrickView, errors: &ErrorPattern, p: &GapParams<R>) -> Score<R> {
    let gaps = frozen_gaps::<W, R>(view, errors, p.phi);
    let frozen: Vec<GapValue<R>> = gaps.iter().flatten().map(|g| g.frozen_delta).collect();
    gap_score_from(&frozen, p.delta_coef)
}

pub fn gap_score_from<R: Real>(frozen: &[GapValue<R>], delta_coef: R) -> Score<R> {
    let sum = frozen.iter().fold(R::zero(), |acc, g| match g {
        GapValue::Finite(d) => acc + (-delta_coef * *d).exp(),
        GapValue::Infinite => acc,
    });
    Score::plain(-sum)
}

/// Copy indices from best to worst; equal keys keep index order.
pub fn rank_copies<R: Real>(scores: &[Score<R>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].key.partial_cmp(&scores[a].key).unwrap_or(Ordering::Equal));
    order
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TunePoint<P> {
    pub params: P,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult<P> {
    pub best: usize,
    pub points: Vec<TunePoint<P>>,
}

impl<P> TuneResult<P> {
    pub fn best_point(&self) -> &TunePoint<P> {
        &self.points[self.best]
    }
}

/// Evaluate every grid point with `eval` (returning `(failures, trials)`)
/// and pick the lowest failure rate; the first minimum wins ties.
pub fn tune_params<P: Clone, F>(grid: &[P], mut eval: F) -> Result<TuneResult<P>, ScoringError>
where
    F: FnMut(&P) -> (u64, u64),
{
    if grid.is_empty() {
        return Err(ScoringError::EmptyGrid);
    }
    let mut points = Vec::with_capacity(grid.len());
    let mut best = 0;
    for (i, params) in grid.iter().enumerate() {
        let (failures, trials) = eval(params);
        let rate = if trials == 0 { f64::NAN } else { failures as f64 / trials as f64 };
        points.push(TunePoint { params: params.clone(), trials, failures, rate });
        if i > 0 && rate < points[best].rate {
            best = i;
        }
    }
    Ok(TuneResult { best, points })
}
