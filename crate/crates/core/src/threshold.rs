//! Logical error rates, threshold scans and crossing estimates.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{stream, EngineError, MacromuxConfig, Pipeline};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("no crossing in the scanned range")]
    NoCrossing,
    #[error("need at least two lattice sizes, got {0}")]
    TooFewSizes(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub l: usize,
    pub p: f64,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl RatePoint {
    pub fn new(l: usize, p: f64, trials: u64, failures: u64) -> Self {
        let rate = if trials == 0 { 0.0 } else { failures as f64 / trials as f64 };
        let (ci_lo, ci_hi) = wilson_interval(failures, trials, Z95);
        RatePoint { l, p, trials, failures, rate, ci_lo, ci_hi }
    }

    /// Binomial standard error of the rate.
    pub fn std_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Run `trials` independent trials of `trial` in parallel and count failures.
/// The result does not depend on scheduling.
pub fn estimate_rate<F, E>(l: usize, p: f64, trials: u64, trial: F) -> Result<RatePoint, E>
where
    F: Fn(u64) -> Result<bool, E> + Sync,
    E: Send,
{
    let failures = (0..trials)
        .into_par_iter()
        .map(|t| trial(t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(RatePoint::new(l, p, trials, failures))
}

/// Seed for one (L, p) point derived from the master seed.
pub fn point_seed(seed: u64, l: usize, p: f64) -> u64 {
    use rand::RngCore;
    stream(seed, l as u64, 0x7468_7265, p.to_bits(), 0, 0).next_u64()
}

/// Pipeline for the base configuration at lattice size `l` and rate `p`.
pub fn config_at(base: &MacromuxConfig, l: usize, p: f64) -> MacromuxConfig {
    MacromuxConfig { l, model: base.model.at(p), seed: point_seed(base.seed, l, p), ..base.clone() }
}

/// Logical error rate of the full pipeline at one (L, p).
pub fn estimate_config_rate(base: &MacromuxConfig, l: usize, p: f64, trials: u64) -> Result<RatePoint, EngineError> {
    let pipeline = Pipeline::new(config_at(base, l, p))?;
    estimate_rate(l, p, trials, |t| pipeline.run_trial(t).map(|r| r.failed()))
}

/// Rates for every size and grid point, ordered by (L, p). `on_point` is
/// called as each point completes.
pub fn scan<F>(
    base: &MacromuxConfig,
    p_grid: &[f64],
    sizes: &[usize],
    trials: u64,
    mut on_point: F,
) -> Result<Vec<RatePoint>, EngineError>
where
    F: FnMut(&RatePoint),
{
    let mut out = Vec::with_capacity(p_grid.len() * sizes.len());
    for &l in sizes {
        for &p in p_grid {
            let point = estimate_config_rate(base, l, p, trials)?;
            on_point(&point);
            out.push(point);
        }
    }
    Ok(out)
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub l_small: usize,
    pub l_large: usize,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdEstimate {
    pub p_th: f64,
    /// Bootstrap standard deviation of `p_th`.
    pub std: f64,
    pub crossings: Vec<Crossing>,
}

const BOOTSTRAP_SAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x5eed;

/// Curves keyed by L with points sorted by p.
fn curves(points: &[RatePoint]) -> BTreeMap<usize, Vec<RatePoint>> {
    let mut map: BTreeMap<usize, Vec<RatePoint>> = BTreeMap::new();
    for pt in points {
        map.entry(pt.l).or_default().push(*pt);
    }
    for v in map.values_mut() {
        v.sort_by(|a, b| a.p.total_cmp(&b.p));
    }
    map
}

fn log_rate(failures: u64, trials: u64) -> f64 {
    let floor = 0.5 / trials.max(1) as f64;
    (failures as f64 / trials.max(1) as f64).max(floor).ln()
}

/// Crossing of two curves on a shared grid: where `ln r_large − ln r_small`
/// turns from negative to positive, linearly interpolated. With several
/// sign changes the median one is used.
fn pair_crossing(small: &[(f64, f64)], large: &[(f64, f64)]) -> Option<f64> {
    let diffs: Vec<(f64, f64)> = small
        .iter()
        .filter_map(|&(p, ls)| large.iter().find(|(q, _)| *q == p).map(|&(_, ll)| (p, ll - ls)))
        .filter(|&(_, d)| d != 0.0)
        .collect();
    let mut found = Vec::new();
    for w in diffs.windows(2) {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        if d0 < 0.0 && d1 > 0.0 {
            found.push(p0 + (p1 - p0) * (-d0) / (d1 - d0));
        }
    }
    if found.is_empty() {
        None
    } else {
        Some(found[(found.len() - 1) / 2])
    }
}

fn crossings_of(map: &BTreeMap<usize, Vec<(f64, f64)>>) -> Vec<Crossing> {
    let sizes: Vec<usize> = map.keys().copied().collect();
    let mut out = Vec::new();
    for i in 0..sizes.len() {
        for j in i + 1..sizes.len() {
            if let Some(p) = pair_crossing(&map[&sizes[i]], &map[&sizes[j]]) {
                out.push(Crossing { l_small: sizes[i], l_large: sizes[j], p });
            }
        }
    }
    out
}

/// Threshold from pairwise curve crossings, with a parametric bootstrap of
/// the failure counts for the uncertainty.
pub fn find_crossing(points: &[RatePoint]) -> Result<ThresholdEstimate, ThresholdError> {
    let by_l = curves(points);
    if by_l.len() < 2 {
        return Err(ThresholdError::TooFewSizes(by_l.len()));
    }
    let logs: BTreeMap<usize, Vec<(f64, f64)>> = by_l
        .iter()
        .map(|(&l, pts)| (l, pts.iter().map(|pt| (pt.p, log_rate(pt.failures, pt.trials))).collect()))
        .collect();
    let crossings = crossings_of(&logs);
    if crossings.is_empty() {
        return Err(ThresholdError::NoCrossing);
    }
    let p_th = crossings.iter().map(|c| c.p).sum::<f64>() / crossings.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut samples = Vec::with_capacity(BOOTSTRAP_SAMPLES);
    for _ in 0..BOOTSTRAP_SAMPLES {
        let resampled: BTreeMap<usize, Vec<(f64, f64)>> = by_l
            .iter()
            .map(|(&l, pts)| {
                let v = pts
                    .iter()
                    .map(|pt| {
                        let k = Binomial::new(pt.trials, pt.rate.clamp(0.0, 1.0)).map(|b| b.sample(&mut rng)).unwrap_or(pt.failures);
                        (pt.p, log_rate(k, pt.trials))
                    })
                    .collect();
                (l, v)
            })
            .collect();
        let cs = crossings_of(&resampled);
        if !cs.is_empty() {
            samples.push(cs.iter().map(|c| c.p).sum::<f64>() / cs.len() as f64);
        }
    }
    let std = if samples.len() > 1 {
        let m = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ThresholdEstimate { p_th, std, crossings })
}
