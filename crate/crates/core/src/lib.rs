pub mod dicing;
pub mod engine;
pub mod gap;
pub mod lattice;
pub mod matching;
pub mod scalar;
pub mod scoring;
pub mod threshold;

/// Edge weight used by the simulation pipeline.
pub type EdgeWeight = i64;
/// Probabilities, scores and free parameters used by the simulation pipeline.
pub type Prob = f64;

pub type Graph = matching::DecodingGraph<EdgeWeight>;
pub type Gap = gap::GapResult<EdgeWeight, Prob>;
pub type BrickScorer = scoring::Scorer<Prob>;
