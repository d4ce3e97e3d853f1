//! Block configuration files and CSV weight matrices.
//!
//! Config files are TOML; weight matrices are plain CSV (one row per line).
//! Any weight file left unset is drawn from the run seed instead, so sweeps
//! work out of the box and regression studies can pin exact weights.

use crate::dtm::TransferProtocol;
use crate::error::{Error, Result};
use crate::fixed::FixedPointFormat;
use crate::models::attention::{AttnConfig, AttnWeights, FfnWeights};
use crate::models::resnet::ResBlockConfig;
use crate::rng::RandomSource;
use crate::tensor::RealTensor;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Reads a CSV matrix; all rows must have the same width.
pub fn read_matrix_csv(path: &Path) -> Result<RealTensor> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match cols {
            None => cols = Some(fields.len()),
            Some(c) if c != fields.len() => {
                return Err(Error::Config(format!(
                    "{}:{}: expected {c} fields, got {}",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )))
            }
            _ => {}
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "{}:{}: field {} is not a number: '{}'",
                    path.display(),
                    lineno + 1,
                    col + 1,
                    field.trim()
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Config(format!("{}: empty matrix", path.display())))?;
    RealTensor::new(vec![rows, cols], data)
}

/// Writes a matrix (any rank; the last extent is the column count) as CSV.
pub fn write_matrix_csv(t: &RealTensor, path: &Path) -> Result<()> {
    let cols = *t.shape().last().unwrap();
    let mut out = String::new();
    for row in t.data().chunks(cols) {
        let line = row
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn default_gamma() -> f64 {
    0.15
}
fn default_beta() -> f64 {
    2.0
}
fn default_eps() -> f64 {
    1e-5
}
fn default_total_bits() -> u32 {
    48
}
fn default_frac_bits() -> u32 {
    24
}
fn default_input_low() -> f64 {
    1.8
}
fn default_input_high() -> f64 {
    2.2
}
fn default_kernel_low() -> f64 {
    -0.05
}
fn default_kernel_high() -> f64 {
    0.15
}
fn default_bias() -> f64 {
    0.1
}
fn default_ln_eps() -> f64 {
    1e-5
}
fn default_weight_scale() -> f64 {
    0.4
}

/// Residual-block instance description. The defaults produce the
/// well-conditioned seeded instance (all-positive activations, output
/// amplitudes clear of the sign-resolution threshold) used in the
/// fidelity-versus-precision studies.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResnetBlockSpec {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel_size: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_total_bits")]
    pub total_bits: u32,
    #[serde(default = "default_frac_bits")]
    pub frac_bits: u32,
    #[serde(default = "default_input_low")]
    pub input_low: f64,
    #[serde(default = "default_input_high")]
    pub input_high: f64,
    #[serde(default = "default_kernel_low")]
    pub kernel_low: f64,
    #[serde(default = "default_kernel_high")]
    pub kernel_high: f64,
    #[serde(default = "default_bias")]
    pub bias: f64,
    /// Optional CSV with `channels*channels*kernel_size` rows of
    /// `kernel_size` columns.
    #[serde(default)]
    pub kernel_file: Option<PathBuf>,
    /// Optional CSV with one row of `channels` bias values.
    #[serde(default)]
    pub bias_file: Option<PathBuf>,
}

/// A residual-block instance ready to run.
pub struct ResnetInstance {
    pub config: ResBlockConfig,
    pub input: RealTensor,
    pub kernel: RealTensor,
    pub bias: Vec<f64>,
}

impl ResnetBlockSpec {
    pub fn build(&self, transfer: TransferProtocol, rng: &mut RandomSource) -> Result<ResnetInstance> {
        let format = FixedPointFormat::new(self.total_bits, self.frac_bits)?;
        let config = ResBlockConfig {
            batch: self.batch,
            channels: self.channels,
            height: self.height,
            width: self.width,
            kernel_size: self.kernel_size,
            gamma: self.gamma,
            beta: self.beta,
            eps: self.eps,
            format,
            transfer,
        };
        config.validate()?;
        let c = self.channels;
        let k = self.kernel_size;
        let input = RealTensor::new(
            vec![self.batch, c, self.height, self.width],
            (0..config.dim())
                .map(|_| rng.uniform_in(self.input_low, self.input_high))
                .collect(),
        )?;
        let kernel = match &self.kernel_file {
            Some(path) => {
                let m = read_matrix_csv(path)?;
                if m.len() != c * c * k * k {
                    return Err(Error::Config(format!(
                        "{}: kernel has {} entries, expected {}",
                        path.display(),
                        m.len(),
                        c * c * k * k
                    )));
                }
                RealTensor::new(vec![c, c, k, k], m.into_data())?
            }
            None => RealTensor::new(
                vec![c, c, k, k],
                (0..c * c * k * k)
                    .map(|_| rng.uniform_in(self.kernel_low, self.kernel_high))
                    .collect(),
            )?,
        };
        let bias = match &self.bias_file {
            Some(path) => {
                let m = read_matrix_csv(path)?;
                if m.len() != c {
                    return Err(Error::Config(format!(
                        "{}: bias has {} entries, expected {c}",
                        path.display(),
                        m.len()
                    )));
                }
                m.into_data()
            }
            None => vec![self.bias; c],
        };
        Ok(ResnetInstance {
            config,
            input,
            kernel,
            bias,
        })
    }
}

/// Transformer-block instance description.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformerBlockSpec {
    pub batch: usize,
    pub tokens: usize,
    pub embed: usize,
    pub heads: usize,
    pub ffn_hidden: usize,
    #[serde(default = "default_ln_eps")]
    pub ln_eps: f64,
    #[serde(default = "default_total_bits")]
    pub total_bits: u32,
    #[serde(default = "default_frac_bits")]
    pub frac_bits: u32,
    #[serde(default = "default_weight_scale")]
    pub weight_scale: f64,
    #[serde(default)]
    pub w_q_file: Option<PathBuf>,
    #[serde(default)]
    pub w_k_file: Option<PathBuf>,
    #[serde(default)]
    pub w_v_file: Option<PathBuf>,
    #[serde(default)]
    pub w_o_file: Option<PathBuf>,
}

pub struct TransformerInstance {
    pub config: AttnConfig,
    pub input: RealTensor,
    pub attn: AttnWeights,
    pub ffn: FfnWeights,
}

impl TransformerBlockSpec {
    pub fn build(
        &self,
        transfer: TransferProtocol,
        rng: &mut RandomSource,
    ) -> Result<TransformerInstance> {
        let format = FixedPointFormat::new(self.total_bits, self.frac_bits)?;
        let config = AttnConfig {
            batch: self.batch,
            tokens: self.tokens,
            embed: self.embed,
            heads: self.heads,
            format,
            transfer,
            ln_eps: self.ln_eps,
        };
        config.validate()?;
        let d = self.embed;
        let mut attn = AttnWeights::seeded(d, self.weight_scale, rng);
        let load = |path: &Option<PathBuf>, slot: &mut RealTensor, name: &str| -> Result<()> {
            if let Some(p) = path {
                let m = read_matrix_csv(p)?;
                if m.shape() != [d, d] {
                    return Err(Error::Config(format!(
                        "{}: {name} must be {d}x{d}, got {:?}",
                        p.display(),
                        m.shape()
                    )));
                }
                *slot = m;
            }
            Ok(())
        };
        load(&self.w_q_file, &mut attn.w_q, "w_q")?;
        load(&self.w_k_file, &mut attn.w_k, "w_k")?;
        load(&self.w_v_file, &mut attn.w_v, "w_v")?;
        load(&self.w_o_file, &mut attn.w_o, "w_o")?;
        let ffn = FfnWeights::seeded(d, self.ffn_hidden, self.weight_scale, rng);
        let input = RealTensor::new(
            vec![self.batch, self.tokens, d],
            (0..self.batch * self.tokens * d)
                .map(|_| rng.uniform_in(-1.0, 1.0))
                .collect(),
        )?;
        Ok(TransformerInstance {
            config,
            input,
            attn,
            ffn,
        })
    }
}
