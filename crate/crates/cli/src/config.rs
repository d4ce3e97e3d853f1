//! TOML config schemas for the subcommands. Unknown keys are rejected so
//! typos surface as line-precise errors.

use anyhow::{bail, Context};
use qdl_core::dtm::TransferProtocol;
use qdl_core::models::{ResnetBlockSpec, TransformerBlockSpec};
use qdl_core::qlam::NoiseMode;
use qdl_core::rng::RandomSource;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Derives a reproducible seed from a base seed and the parameters
/// identifying one grid point; independent of grid layout, so a single-point
/// re-run of any recorded row reproduces it bit-exactly.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut src = RandomSource::new(base);
    for &t in tags {
        src = src.child(t);
    }
    src.seed()
}

pub fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("config {}", path.display()))
}

/// Model family, fixing the input-dimension to tensor-dimension mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Resnet,
    Transformer,
}

impl ModelKind {
    /// Tensor dimension `N`: `(input_dim / 4)^2` for the convolutional
    /// family, `(input_dim / 16)^2` for the transformer family.
    pub fn tensor_dim(&self, input_dim: usize) -> anyhow::Result<usize> {
        let patch = match self {
            ModelKind::Resnet => 4,
            ModelKind::Transformer => 16,
        };
        if input_dim == 0 || !input_dim.is_multiple_of(patch) {
            bail!("input_dim {input_dim} must be a positive multiple of {patch}");
        }
        let side = input_dim / patch;
        Ok(side * side)
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub mode: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
}

fn default_seeds() -> u64 {
    1
}
fn default_decay() -> f64 {
    2.0
}
fn default_task_samples() -> usize {
    400
}

/// `dcd-sweep` / `tomo-sweep` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub sweep: SweepSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub model: ModelKind,
    pub input_dims: Vec<usize>,
    /// Coefficient-transfer grid (dcd-sweep).
    #[serde(default)]
    pub ranks: Vec<usize>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    /// Sampling-precision grid (tomo-sweep).
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default = "default_decay")]
    pub spectrum_decay: f64,
    #[serde(default)]
    pub with_task: bool,
    #[serde(default = "default_task_samples")]
    pub task_samples: usize,
}

/// `block` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub block: BlockSection,
    pub grid: BlockGrid,
    pub transfer: BlockTransfer,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSection {
    pub kind: ModelKind,
    /// Optional TOML file overriding the arithmetic cost-table constants.
    #[serde(default)]
    pub cost_table: Option<PathBuf>,
    #[serde(default)]
    pub resnet: Option<ResnetBlockSpec>,
    #[serde(default)]
    pub transformer: Option<TransformerBlockSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockGrid {
    pub noise_modes: Vec<String>,
    pub precisions: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockTransfer {
    /// `linf` (precision = epsilon) or `dcd` (precision = delta, fixed rank).
    pub protocol: String,
    #[serde(default)]
    pub rank: Option<usize>,
}

impl BlockTransfer {
    pub fn protocol_at(&self, precision: f64) -> anyhow::Result<TransferProtocol> {
        match self.protocol.as_str() {
            "linf" => Ok(TransferProtocol::Linf { epsilon: precision }),
            "dcd" => {
                let rank = self
                    .rank
                    .ok_or_else(|| anyhow::anyhow!("dcd transfer needs a rank"))?;
                Ok(TransferProtocol::Dcd {
                    rank,
                    delta: precision,
                })
            }
            other => bail!("unknown transfer protocol '{other}'"),
        }
    }
}

fn default_gc_dim() -> usize {
    3
}
fn default_gc_samples() -> usize {
    16
}
fn default_gc_delta() -> f64 {
    0.01
}
fn default_gc_step() -> f64 {
    1e-4
}
fn default_gc_seeds() -> u64 {
    5
}

/// `gradcheck` config; every field has a default so the command runs bare.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckFile {
    #[serde(default)]
    pub gradcheck: GradcheckSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckSection {
    pub dim: usize,
    pub samples: usize,
    pub delta: f64,
    pub fd_step: f64,
    pub seeds: u64,
}

impl Default for GradcheckSection {
    fn default() -> Self {
        Self {
            dim: default_gc_dim(),
            samples: default_gc_samples(),
            delta: default_gc_delta(),
            fd_step: default_gc_step(),
            seeds: default_gc_seeds(),
        }
    }
}

/// `overhead-report` config.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadFile {
    pub overhead: OverheadSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_batch() -> usize {
    1
}
fn default_hw() -> usize {
    8
}
fn default_sampling() -> f64 {
    1e6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverheadSection {
    pub model: ModelKind,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default)]
    pub channels: Vec<usize>,
    #[serde(default)]
    pub kernels: Vec<usize>,
    #[serde(default = "default_hw")]
    pub height: usize,
    #[serde(default = "default_hw")]
    pub width: usize,
    #[serde(default)]
    pub embed_dims: Vec<usize>,
    #[serde(default)]
    pub tokens: Vec<usize>,
    #[serde(default = "default_sampling")]
    pub sampling: f64,
}

/// Resolves the noise mode from the CLI flag (wins) or the config section.
pub fn resolve_noise_mode(
    flag: Option<NoiseMode>,
    section: &NoiseSection,
) -> anyhow::Result<NoiseMode> {
    if let Some(mode) = flag {
        return Ok(mode);
    }
    match &section.mode {
        Some(name) => Ok(name.parse::<NoiseMode>()?),
        None => Ok(NoiseMode::Bounded),
    }
}

/// Resolves the base seed: CLI flag, then config, then 0.
pub fn resolve_seed(flag: Option<u64>, section: &NoiseSection) -> u64 {
    flag.or(section.seed).unwrap_or(0)
}
