//! The macromux pipeline for one Monte Carlo trial.
//!
//! Every brick is built in `M` copies. At each stage the copies of the two
//! child bricks are ranked by score and fused rank-by-rank, with errors on the
//! connecting fusions sampled at that moment. At the end the best copy of each
//! maximum brick is kept, the final-stage fusions are sampled, and the whole
//! lattice is decoded on both syndrome graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dicing::{build_cuboidal_dicing, brick_view, global_outcome, BrickView, DicingError, DicingScheme, ErrorPattern};
use crate::lattice::{build_syndrome_graphs, Axis, FusionNetwork, LatticeError, OutcomeType, SyndromeGraph};
use crate::matching::{min_weight_correction, min_weight_correction_with_table, DecodingGraph, DistanceTable, MatchingError};
use crate::scoring::{count_tallies, rank_copies, Score, Scorer};
use crate::EdgeWeight;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Dicing(#[from] DicingError),
    #[error("decoding failed: {0}")]
    Decode(#[from] MatchingError),
    #[error("invalid error model: {0}")]
    Model(String),
    #[error("macromux parameter M must be at least 1")]
    NoCopies,
    #[error("expected {expected} copies per brick, got {got}")]
    CopyCount { expected: usize, got: usize },
    #[error("no acceptable copy of brick {brick} after {attempts} attempts")]
    IdealRejection { brick: usize, attempts: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Erasure,
    Bitflip,
    MixedRay,
    Custom,
}

/// i.i.d. outcome noise: erase with `p_erasure`, otherwise flip with `p_flip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub kind: ErrorKind,
    pub p_erasure: f64,
    pub p_flip: f64,
}

impl ErrorModel {
    pub fn erasure(p: f64) -> Self {
        ErrorModel { kind: ErrorKind::Erasure, p_erasure: p, p_flip: 0.0 }
    }

    pub fn bitflip(p: f64) -> Self {
        ErrorModel { kind: ErrorKind::Bitflip, p_erasure: 0.0, p_flip: p }
    }

    /// Erasure rate `p` with flips at `p / 10`.
    pub fn mixed_ray(p: f64) -> Self {
        ErrorModel { kind: ErrorKind::MixedRay, p_erasure: p, p_flip: p / 10.0 }
    }

    pub fn custom(p_erasure: f64, p_flip: f64) -> Self {
        ErrorModel { kind: ErrorKind::Custom, p_erasure, p_flip }
    }

    /// Same kind at a new physical rate (the erasure rate for mixed ray).
    pub fn at(&self, p: f64) -> Self {
        match self.kind {
            ErrorKind::Erasure => Self::erasure(p),
            ErrorKind::Bitflip => Self::bitflip(p),
            ErrorKind::MixedRay => Self::mixed_ray(p),
            ErrorKind::Custom => Self::custom(p, self.p_flip),
        }
    }

    /// The rate varied in threshold scans.
    pub fn rate(&self) -> f64 {
        match self.kind {
            ErrorKind::Bitflip => self.p_flip,
            _ => self.p_erasure,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        for (name, p) in [("p_erasure", self.p_erasure), ("p_flip", self.p_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(EngineError::Model(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        let ok = match self.kind {
            ErrorKind::Erasure => self.p_flip == 0.0,
            ErrorKind::Bitflip => self.p_erasure == 0.0,
            ErrorKind::MixedRay => (self.p_flip - self.p_erasure / 10.0).abs() <= 1e-12,
            ErrorKind::Custom => true,
        };
        if ok {
            Ok(())
        } else {
            Err(EngineError::Model(format!(
                "{:?} model inconsistent with p_erasure = {}, p_flip = {}",
                self.kind, self.p_erasure, self.p_flip
            )))
        }
    }
}

/// Sample `outcomes` independent outcome errors.
pub fn sample_outcome_errors<G: Rng>(rng: &mut G, outcomes: usize, model: &ErrorModel) -> ErrorPattern {
    let mut pat = ErrorPattern::default();
    append_errors(rng, outcomes, model, &mut pat);
    pat
}

fn append_errors<G: Rng>(rng: &mut G, outcomes: usize, model: &ErrorModel, out: &mut ErrorPattern) {
    out.erased.reserve(outcomes);
    out.flipped.reserve(outcomes);
    let start = out.erased.len();
    if model.p_erasure == 0.0 && model.p_flip == 0.0 {
        out.erased.resize(start + outcomes, false);
        out.flipped.resize(start + outcomes, false);
        return;
    }
    for _ in 0..outcomes {
        let erased = model.p_erasure > 0.0 && rng.random::<f64>() < model.p_erasure;
        let flipped = !erased && model.p_flip > 0.0 && rng.random::<f64>() < model.p_flip;
        out.erased.push(erased);
        out.flipped.push(flipped);
    }
}

/// Full description of a simulated scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MacromuxConfig {
    pub l: usize,
    pub max_brick: [usize; 3],
    pub offset_step: usize,
    pub copies: usize,
    pub scorer: Scorer<f64>,
    pub model: ErrorModel,
    /// Replace every maximum brick by a rejection-sampled perfect copy.
    pub ideal_bricks: bool,
    pub max_attempts: usize,
    pub seed: u64,
}

impl MacromuxConfig {
    pub fn baseline(l: usize, model: ErrorModel, seed: u64) -> Self {
        MacromuxConfig {
            l,
            max_brick: [1, 1, 1],
            offset_step: 0,
            copies: 1,
            scorer: Scorer::Count(Default::default()),
            model,
            ideal_bricks: false,
            max_attempts: 100_000,
            seed,
        }
    }
}

/// Per-stage diagnostics for one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    /// Mean score of the copies ranked at this stage, when scoring ran.
    pub mean_score: Option<f64>,
    pub erasures: usize,
    pub flips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// Failure flags indexed `[type][axis]`.
    pub flags: [[bool; 3]; 2],
    pub stages: Vec<StageDiagnostics>,
    /// Internal erasures of the selected maximum-brick copies.
    pub selected_erasures: usize,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.flags.iter().flatten().any(|&f| f)
    }
}

/// Error configuration over all `6 L^3` outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalErrors {
    pub pattern: ErrorPattern,
}

const TAG_STAGE: u64 = 1;
const TAG_FINAL: u64 = 2;
const TAG_HIDDEN: u64 = 3;
const TAG_IDEAL: u64 = 4;
const TAG_MONOLITHIC: u64 = 5;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent RNG stream for a (seed, trial, purpose, a, b, c) tuple.
pub fn stream(seed: u64, trial: u64, tag: u64, a: u64, b: u64, c: u64) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for x in [trial, tag, a, b, c] {
        h = splitmix(h ^ x);
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Copies ranked best-first on each side, paired rank by rank and extended
/// with the connecting-fusion errors.
pub fn pair_copies<R: crate::scalar::Real>(
    left: &[ErrorPattern],
    left_scores: &[Score<R>],
    right: &[ErrorPattern],
    right_scores: &[Score<R>],
    connecting: Vec<ErrorPattern>,
) -> Result<Vec<ErrorPattern>, EngineError> {
    let m = left.len();
    for got in [left_scores.len(), right.len(), right_scores.len(), connecting.len()] {
        if got != m {
            return Err(EngineError::CopyCount { expected: m, got });
        }
    }
    let lo = rank_copies(left_scores);
    let ro = rank_copies(right_scores);
    Ok(connecting
        .into_iter()
        .enumerate()
        .map(|(i, conn)| {
            let mut p = left[lo[i]].clone();
            p.extend_from(&right[ro[i]]);
            p.extend_from(&conn);
            p
        })
        .collect())
}

/// Largest syndrome graph that gets an all-pairs distance table.
const MAX_TABLE_NODES: usize = 1024;

/// Precomputed geometry for running trials of one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: MacromuxConfig,
    scheme: DicingScheme,
    /// Views of every brick, per stage; empty when no scoring is needed.
    views: Vec<Vec<BrickView>>,
    graphs: [SyndromeGraph; 2],
    decoders: [DecodingGraph<EdgeWeight>; 2],
    /// Present for flip-only noise on graphs small enough to tabulate.
    tables: Option<[DistanceTable<EdgeWeight>; 2]>,
    final_fusions: Vec<usize>,
}

impl Pipeline {
    pub fn new(config: MacromuxConfig) -> Result<Self, EngineError> {
        if config.copies == 0 {
            return Err(EngineError::NoCopies);
        }
        config.model.validate()?;
        let net = FusionNetwork::new(config.l)?;
        let scheme = build_cuboidal_dicing(&net, config.max_brick, config.offset_step)?;
        let needs_views = config.copies > 1 || config.ideal_bricks;
        let views = if needs_views {
            (0..scheme.stages().len())
                .map(|s| scheme.bricks(s).iter().map(|b| brick_view(&scheme, b)).collect())
                .collect()
        } else {
            Vec::new()
        };
        let (primal, dual) = build_syndrome_graphs(&net);
        let decoders = [decoder_for(&primal), decoder_for(&dual)];
        let tables = (config.model.p_erasure == 0.0 && primal.num_checks() <= MAX_TABLE_NODES)
            .then(|| decoders.clone().map(|d| DistanceTable::new(&d).expect("syndrome graphs have no boundary")));
        let final_fusions = scheme.final_fusions();
        Ok(Pipeline { config, scheme, views, graphs: [primal, dual], decoders, tables, final_fusions })
    }

    pub fn config(&self) -> &MacromuxConfig {
        &self.config
    }

    pub fn scheme(&self) -> &DicingScheme {
        &self.scheme
    }

    pub fn graph(&self, kind: OutcomeType) -> &SyndromeGraph {
        &self.graphs[kind.index()]
    }

    /// One full trial; a pure function of the configuration and `trial`.
    pub fn run_trial(&self, trial: u64) -> Result<TrialResult, EngineError> {
        let (global, stages, selected_erasures) = if self.config.ideal_bricks {
            self.sample_ideal(trial)?
        } else {
            self.sample_macromux(trial)
        };
        let flags = self.decode_and_check(&global, trial)?;
        Ok(TrialResult { flags, stages, selected_erasures })
    }

    /// Errors sampled on all outcomes at once, bypassing the dicing.
    pub fn run_monolithic(&self, trial: u64) -> Result<TrialResult, EngineError> {
        let n = self.scheme.network().num_outcomes();
        let mut rng = stream(self.config.seed, trial, TAG_MONOLITHIC, 0, 0, 0);
        let pattern = sample_outcome_errors(&mut rng, n, &self.config.model);
        let stages = vec![StageDiagnostics {
            stage: 0,
            mean_score: None,
            erasures: pattern.erased.iter().filter(|&&e| e).count(),
            flips: pattern.flipped.iter().filter(|&&f| f).count(),
        }];
        let flags = self.decode_and_check(&GlobalErrors { pattern }, trial)?;
        Ok(TrialResult { flags, stages, selected_erasures: 0 })
    }

    fn score(&self, stage: usize, brick: usize, pat: &ErrorPattern) -> Score<f64> {
        self.config.scorer.score::<EdgeWeight>(&self.views[stage][brick], pat)
    }

    /// Copies of every brick at every stage, then best-of-M selection.
    fn sample_macromux(&self, trial: u64) -> (GlobalErrors, Vec<StageDiagnostics>, usize) {
        let m = self.config.copies;
        let seed = self.config.seed;
        let model = &self.config.model;
        let mut diags = Vec::new();
        // stage-0 bricks hold no fusions
        let mut copies: Vec<Vec<ErrorPattern>> = vec![vec![ErrorPattern::default(); m]; self.scheme.bricks(0).len()];
        for s in 1..self.scheme.stages().len() {
            let scored = m > 1 && s > 1;
            let scores: Vec<Vec<Score<f64>>> = if scored {
                copies.iter().enumerate().map(|(b, cs)| cs.iter().map(|p| self.score(s - 1, b, p)).collect()).collect()
            } else {
                copies.iter().map(|cs| vec![Score::plain(0.0); cs.len()]).collect()
            };
            let mut diag = StageDiagnostics {
                stage: s,
                mean_score: scored.then(|| mean(scores.iter().flatten().map(|x| x.value))),
                erasures: 0,
                flips: 0,
            };
            let mut next = Vec::with_capacity(self.scheme.bricks(s).len());
            for brick in self.scheme.bricks(s) {
                let [a, c] = brick.children.expect("stages after the first have children");
                let conn_outcomes = 2 * brick.connecting.len();
                let connecting: Vec<ErrorPattern> = (0..m)
                    .map(|k| {
                        let mut rng = stream(seed, trial, TAG_STAGE, s as u64, brick.index as u64, k as u64);
                        sample_outcome_errors(&mut rng, conn_outcomes, model)
                    })
                    .collect();
                for p in &connecting {
                    diag.erasures += p.erased.iter().filter(|&&e| e).count();
                    diag.flips += p.flipped.iter().filter(|&&f| f).count();
                }
                let paired = pair_copies(&copies[a], &scores[a], &copies[c], &scores[c], connecting)
                    .expect("every brick has M copies");
                next.push(paired);
            }
            diags.push(diag);
            copies = next;
        }

        // Final selection: keep the best copy of each maximum brick.
        let last = self.scheme.last_stage();
        let mut selected = Vec::with_capacity(copies.len());
        let mut final_scores = Vec::new();
        for (b, cs) in copies.into_iter().enumerate() {
            let pick = if m > 1 {
                let scores: Vec<Score<f64>> = cs.iter().map(|p| self.score(last, b, p)).collect();
                final_scores.extend(scores.iter().map(|x| x.value));
                rank_copies(&scores)[0]
            } else {
                0
            };
            selected.push(cs.into_iter().nth(pick).unwrap());
        }
        let (global, fin) = self.assemble(trial, &selected);
        diags.push(StageDiagnostics {
            stage: self.scheme.final_stage(),
            mean_score: (m > 1).then(|| mean(final_scores.into_iter())),
            ..fin
        });
        let selected_erasures = selected.iter().map(|p| p.erased.iter().filter(|&&e| e).count()).sum();
        (global, diags, selected_erasures)
    }

    /// Rejection-sample a perfect copy of every maximum brick.
    fn sample_ideal(&self, trial: u64) -> Result<(GlobalErrors, Vec<StageDiagnostics>, usize), EngineError> {
        let last = self.scheme.last_stage();
        let mut selected = Vec::with_capacity(self.scheme.max_bricks().len());
        let mut attempts_total = 0usize;
        for (b, brick) in self.scheme.max_bricks().iter().enumerate() {
            let mut rng = stream(self.config.seed, trial, TAG_IDEAL, b as u64, 0, 0);
            let view = &self.views[last][b];
            let mut accepted = None;
            for _ in 0..self.config.max_attempts {
                attempts_total += 1;
                let p = sample_outcome_errors(&mut rng, brick.num_outcomes(), &self.config.model);
                if is_perfect(view, &p) {
                    accepted = Some(p);
                    break;
                }
            }
            match accepted {
                Some(p) => selected.push(p),
                None => return Err(EngineError::IdealRejection { brick: b, attempts: self.config.max_attempts }),
            }
        }
        let (global, fin) = self.assemble(trial, &selected);
        let diags = vec![
            StageDiagnostics {
                stage: last,
                mean_score: Some(attempts_total as f64 / selected.len().max(1) as f64),
                erasures: 0,
                flips: selected.iter().map(|p| p.flipped.iter().filter(|&&f| f).count()).sum(),
            },
            StageDiagnostics { stage: self.scheme.final_stage(), mean_score: None, ..fin },
        ];
        Ok((global, diags, 0))
    }

    /// Place selected max-brick copies and sample the final-stage fusions.
    fn assemble(&self, trial: u64, selected: &[ErrorPattern]) -> (GlobalErrors, StageDiagnostics) {
        let n = self.scheme.network().num_outcomes();
        let mut pattern = ErrorPattern::clean(n);
        for (brick, p) in self.scheme.max_bricks().iter().zip(selected) {
            for local in 0..p.len() {
                let g = global_outcome(brick, local);
                pattern.erased[g] = p.erased[local];
                pattern.flipped[g] = p.flipped[local];
            }
        }
        let mut rng = stream(self.config.seed, trial, TAG_FINAL, 0, 0, 0);
        let fin = sample_outcome_errors(&mut rng, 2 * self.final_fusions.len(), &self.config.model);
        for (i, &f) in self.final_fusions.iter().enumerate() {
            for t in 0..2 {
                pattern.erased[2 * f + t] = fin.erased[2 * i + t];
                pattern.flipped[2 * f + t] = fin.flipped[2 * i + t];
            }
        }
        let diag = StageDiagnostics {
            stage: self.scheme.final_stage(),
            mean_score: None,
            erasures: fin.erased.iter().filter(|&&e| e).count(),
            flips: fin.flipped.iter().filter(|&&f| f).count(),
        };
        (GlobalErrors { pattern }, diag)
    }

    /// Decode both syndrome graphs and report membrane crossings of
    /// error ⊕ correction. Erased outcomes take a uniformly random value.
    pub fn decode_and_check(&self, global: &GlobalErrors, trial: u64) -> Result<[[bool; 3]; 2], EngineError> {
        let mut hidden = stream(self.config.seed, trial, TAG_HIDDEN, 0, 0, 0);
        let nf = self.scheme.network().num_fusions();
        let mut flags = [[false; 3]; 2];
        for kind in OutcomeType::ALL {
            let t = kind.index();
            let mut erased = vec![false; nf];
            let mut error = vec![false; nf];
            for f in 0..nf {
                let o = 2 * f + t;
                erased[f] = global.pattern.erased[o];
                error[f] = global.pattern.flipped[o];
            }
            for f in 0..nf {
                if erased[f] {
                    error[f] = hidden.random::<bool>();
                }
            }
            let table = self.tables.as_ref().map(|ts| &ts[t]);
            flags[t] = decode_graph(&self.graphs[t], &self.decoders[t], table, &erased, &error)?;
        }
        Ok(flags)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Zero internal erasures and no lit complete check of either type.
pub fn is_perfect(view: &BrickView, p: &ErrorPattern) -> bool {
    !p.erased.iter().any(|&e| e) && OutcomeType::ALL.iter().all(|&k| count_tallies(view.of(k), p) == (0, 0))
}

/// Unit-weight decoding graph with the same node and edge numbering.
pub fn decoder_for(g: &SyndromeGraph) -> DecodingGraph<EdgeWeight> {
    let mut d = DecodingGraph::new(g.num_checks(), 0);
    for &[u, v] in g.edges() {
        d.add_edge(u, v, 1).expect("syndrome graph edges are valid");
    }
    d
}

/// Decode one syndrome graph; returns the per-axis logical failure flags.
pub fn decode_graph(
    g: &SyndromeGraph,
    template: &DecodingGraph<EdgeWeight>,
    table: Option<&DistanceTable<EdgeWeight>>,
    erased: &[bool],
    error: &[bool],
) -> Result<[bool; 3], EngineError> {
    let syndrome = g.syndrome_of(error)?;
    let defects: Vec<usize> = (0..syndrome.len()).filter(|&i| syndrome[i]).collect();
    let mut residual = error.to_vec();
    if !defects.is_empty() {
        let mut dg = template.clone();
        dg.set_erasures(erased);
        let correction = match table {
            Some(t) => min_weight_correction_with_table(&dg, t, &defects)?,
            None => min_weight_correction(&dg, &defects)?,
        };
        for e in correction.edges {
            residual[e] ^= true;
        }
    }
    Ok(Axis::ALL.map(|a| g.crossing_parity(&residual, a)))
}
