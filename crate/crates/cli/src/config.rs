//! Run configuration and brick files.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use macromux::engine::{ErrorKind, ErrorModel, MacromuxConfig};
use macromux::scoring::{CountParams, GapParams, Scorer, ScorerKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "L", default = "default_l")]
    pub l: usize,
    #[serde(default = "default_brick")]
    pub brick: [usize; 3],
    #[serde(default)]
    pub offset_step: usize,
    #[serde(rename = "M", default = "default_copies")]
    pub copies: usize,
    #[serde(default)]
    pub scorer: ScorerConfig,
    #[serde(default)]
    pub error_model: ErrorModelConfig,
    #[serde(default)]
    pub ideal_bricks: bool,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; never affects results, so it is left out of the
    /// resolved echo and the config hash.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    #[serde(default = "default_scorer_kind")]
    pub kind: ScorerKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorModelConfig {
    #[serde(default = "default_error_kind")]
    pub kind: ErrorKind,
    #[serde(rename = "p_E", default)]
    pub p_e: Option<f64>,
    #[serde(rename = "p_P", default)]
    pub p_p: Option<f64>,
}

fn default_l() -> usize {
    8
}
fn default_brick() -> [usize; 3] {
    [1, 1, 1]
}
fn default_copies() -> usize {
    1
}
fn default_max_attempts() -> usize {
    100_000
}
fn default_scorer_kind() -> ScorerKind {
    ScorerKind::Count
}
fn default_alpha() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    2.0
}
fn default_delta() -> f64 {
    1.0
}
fn default_phi() -> f64 {
    0.5
}
fn default_error_kind() -> ErrorKind {
    ErrorKind::Erasure
}

const DEFAULT_P_ERASURE: f64 = 0.1;
const DEFAULT_P_FLIP: f64 = 0.008;

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: default_scorer_kind(),
            alpha: default_alpha(),
            beta: default_beta(),
            delta: default_delta(),
            phi: default_phi(),
        }
    }
}

impl Default for ErrorModelConfig {
    fn default() -> Self {
        ErrorModelConfig { kind: default_error_kind(), p_e: None, p_p: None }
    }
}

impl ScorerConfig {
    pub fn scorer(&self) -> Scorer<f64> {
        match self.kind {
            ScorerKind::Count => Scorer::Count(CountParams::new(self.alpha, self.beta)),
            ScorerKind::Gap => Scorer::Gap(GapParams { delta_coef: self.delta, phi: self.phi }),
        }
    }
}

impl ErrorModelConfig {
    /// Fill in the implied rate and check the model's constraints.
    pub fn resolve(&self) -> Result<ErrorModelConfig> {
        for (name, p) in [("p_E", self.p_e), ("p_P", self.p_p)] {
            if let Some(p) = p {
                ensure!((0.0..=1.0).contains(&p), "error_model.{name} = {p} is outside [0, 1]");
            }
        }
        let (p_e, p_p) = match self.kind {
            ErrorKind::Erasure => {
                if self.p_p.is_some_and(|p| p != 0.0) {
                    bail!("error_model.p_P must be 0 for the erasure model");
                }
                (self.p_e.unwrap_or(DEFAULT_P_ERASURE), 0.0)
            }
            ErrorKind::Bitflip => {
                if self.p_e.is_some_and(|p| p != 0.0) {
                    bail!("error_model.p_E must be 0 for the bitflip model");
                }
                (0.0, self.p_p.unwrap_or(DEFAULT_P_FLIP))
            }
            ErrorKind::MixedRay => {
                let p_e = self.p_e.unwrap_or(DEFAULT_P_ERASURE);
                let ray = ErrorModel::mixed_ray(p_e).p_flip;
                if let Some(p) = self.p_p {
                    ensure!((p - ray).abs() <= 1e-12, "error_model.p_P = {p} breaks the mixed-ray constraint p_P = p_E/10 = {ray}");
                }
                (p_e, ray)
            }
            ErrorKind::Custom => (self.p_e.unwrap_or(0.0), self.p_p.unwrap_or(0.0)),
        };
        Ok(ErrorModelConfig { kind: self.kind, p_e: Some(p_e), p_p: Some(p_p) })
    }

    pub fn model(&self) -> Result<ErrorModel> {
        let r = self.resolve()?;
        let (p_e, p_p) = (r.p_e.unwrap_or(0.0), r.p_p.unwrap_or(0.0));
        Ok(match r.kind {
            ErrorKind::Erasure => ErrorModel::erasure(p_e),
            ErrorKind::Bitflip => ErrorModel::bitflip(p_p),
            ErrorKind::MixedRay => ErrorModel::mixed_ray(p_e),
            ErrorKind::Custom => ErrorModel::custom(p_e, p_p),
        })
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let raw: RunConfig = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        raw.resolved()
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Validated copy with every implied value written out.
    pub fn resolved(&self) -> Result<RunConfig> {
        ensure!(self.copies >= 1, "M must be at least 1");
        ensure!(self.l >= 4 && self.l % 2 == 0, "L must be even and at least 4, got {}", self.l);
        ensure!(self.max_attempts >= 1, "max_attempts must be at least 1");
        ensure!(self.threads != Some(0), "threads must be at least 1");
        let s = &self.scorer;
        for (name, v) in [("alpha", s.alpha), ("beta", s.beta), ("delta", s.delta), ("phi", s.phi)] {
            ensure!(v.is_finite(), "scorer.{name} must be finite");
        }
        Ok(RunConfig { error_model: self.error_model.resolve()?, ..self.clone() })
    }

    pub fn engine_config(&self) -> Result<MacromuxConfig> {
        Ok(MacromuxConfig {
            l: self.l,
            max_brick: self.brick,
            offset_step: self.offset_step,
            copies: self.copies,
            scorer: self.scorer.scorer(),
            model: self.error_model.model()?,
            ideal_bricks: self.ideal_bricks,
            max_attempts: self.max_attempts,
            seed: self.seed,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the canonical resolved JSON.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().to_string().as_bytes()))
    }
}

/// Input of the `gap` command: one brick with explicit local errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrickConfigFile {
    pub dims: [usize; 3],
    /// Lattice the brick is cut from; defaults to the smallest valid one.
    #[serde(rename = "L", default)]
    pub lattice: Option<usize>,
    /// Local outcome indices, `2 * local_fusion + type`.
    #[serde(default)]
    pub erased: Vec<usize>,
    #[serde(default)]
    pub flipped: Vec<usize>,
}

impl BrickConfigFile {
    pub fn load(path: &Path) -> Result<BrickConfigFile> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading brick file {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("invalid brick file {}: {e}", path.display()))
    }

    pub fn lattice_size(&self) -> usize {
        self.lattice.unwrap_or_else(|| {
            let m = 2 * self.dims.iter().copied().max().unwrap_or(1);
            m.max(4).next_multiple_of(2)
        })
    }
}
