//! Residual convolution block on the hybrid pipeline.
//!
//! Main path: quantum convolution -> measurement snapshot for batch
//! statistics -> quantum batch norm -> quantum ReLU; then the identity
//! shortcut adds in and a final ReLU fires. The block boundary runs one more
//! transfer cycle, so the emitted values carry the protocol's extraction
//! noise exactly like a layer input downstream would.
//!
//! Stage ledgers: `conv`, `batchnorm`, `activation`, `shortcut`, `transfer`.
//! Per-channel batch-norm parameters load classically; the normalization
//! arithmetic runs once across the channel index register, so repeat
//! channels do not recharge the ledger.

use crate::dtm::DataTransfer;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::qam::{qadd, qbn, qconv, qrelu, CostTable};
use crate::qlam::NoiseModel;
use crate::resource::{LedgerBook, ResourceLedger};
use crate::tensor::{DigitalTensor, RealTensor};
use crate::{dtm::TransferProtocol, fixed::FixedPointFormat};

#[derive(Debug, Clone, Copy)]
pub struct ResBlockConfig {
    pub batch: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub kernel_size: usize,
    pub gamma: f64,
    pub beta: f64,
    pub eps: f64,
    pub format: FixedPointFormat,
    pub transfer: TransferProtocol,
}

impl ResBlockConfig {
    /// Flattened state dimension of the feature map.
    pub fn dim(&self) -> usize {
        self.batch * self.channels * self.height * self.width
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!(
                "kernel size {} must be odd",
                self.kernel_size
            )));
        }
        if [self.batch, self.channels, self.height, self.width].contains(&0) {
            return Err(Error::InvalidDimension(
                "residual block extents must be positive".into(),
            ));
        }
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::DomainError("eps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ResBlockOutput {
    /// Values after the block-boundary transfer cycle.
    pub values: RealTensor,
    /// Decoded digital output before the boundary transfer.
    pub pre_transfer: RealTensor,
}

fn channel_slice(t: &DigitalTensor, channel: usize) -> DigitalTensor {
    let (b, _c, h, w) = (t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3]);
    let mut data = Vec::with_capacity(b * h * w);
    for bi in 0..b {
        for i in 0..h {
            for j in 0..w {
                data.push(*t.get(&[bi, channel, i, j]));
            }
        }
    }
    DigitalTensor::new(vec![b, h, w], data).unwrap()
}

fn assemble_channels(slices: Vec<DigitalTensor>, shape: &[usize]) -> DigitalTensor {
    let (b, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    let mut data = Vec::with_capacity(b * c * h * w);
    for bi in 0..b {
        for slice in slices.iter() {
            for i in 0..h {
                for j in 0..w {
                    data.push(*slice.get(&[bi, i, j]));
                }
            }
        }
    }
    DigitalTensor::new(shape.to_vec(), data).unwrap()
}

/// Per-channel mean and population variance of a flattened `(B,C,H,W)`
/// snapshot.
fn snapshot_channel_stats(
    snapshot: &[f64],
    b: usize,
    c: usize,
    h: usize,
    w: usize,
) -> Vec<(f64, f64)> {
    let n = (b * h * w) as f64;
    (0..c)
        .map(|ci| {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for bi in 0..b {
                for i in 0..h {
                    for j in 0..w {
                        let v = snapshot[((bi * c + ci) * h + i) * w + j];
                        sum += v;
                        sq += v * v;
                    }
                }
            }
            let mean = sum / n;
            (mean, (sq / n - mean * mean).max(0.0))
        })
        .collect()
}

/// Runs the block. `dt` must match the flattened feature-map dimension.
#[allow(clippy::too_many_arguments)]
pub fn residual_block_forward(
    x: &RealTensor,
    kernel: &RealTensor,
    bias: &[f64],
    cfg: &ResBlockConfig,
    dt: &DataTransfer,
    table: &CostTable,
    noise: &mut NoiseModel,
    book: &mut LedgerBook,
) -> Result<ResBlockOutput> {
    cfg.validate()?;
    if x.shape() != [cfg.batch, cfg.channels, cfg.height, cfg.width] {
        return Err(Error::ShapeMismatch(format!(
            "input shape {:?} does not match the config",
            x.shape()
        )));
    }
    if dt.dim() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: dt.dim(),
        });
    }
    let x_fp = x.encode(cfg.format)?;
    let kernel_fp = kernel.encode(cfg.format)?;
    let bias_fp = bias
        .iter()
        .map(|&v| FixedPoint::encode(v, cfg.format))
        .collect::<Result<Vec<_>>>()?;

    let conv = qconv(&x_fp, &kernel_fp, &bias_fp, table, book.ledger("conv"))?;

    // hybrid statistics: measure the conv output, compute stats classically
    let conv_values = conv.decode();
    let snapshot = dt.snapshot_values(
        conv_values.data(),
        cfg.transfer,
        noise,
        book.ledger("transfer"),
    )?;
    let stats = snapshot_channel_stats(&snapshot, cfg.batch, cfg.channels, cfg.height, cfg.width);

    let mut scratch = ResourceLedger::new();
    let mut bn_slices = Vec::with_capacity(cfg.channels);
    for (ci, &(mean, var)) in stats.iter().enumerate() {
        let slice = channel_slice(&conv, ci);
        let ledger = if ci == 0 {
            book.ledger("batchnorm")
        } else {
            &mut scratch
        };
        bn_slices.push(qbn(
            &slice, mean, var, cfg.gamma, cfg.beta, cfg.eps, table, ledger,
        )?);
    }
    let bn = assemble_channels(bn_slices, conv.shape());

    let main = qrelu(&bn, table, book.ledger("activation"));
    let sum = qadd(&main, &x_fp, table, book.ledger("shortcut"))?;
    let out = qrelu(&sum, table, book.ledger("activation"));

    let pre_transfer = out.decode();
    let extracted = dt.snapshot_values(
        pre_transfer.data(),
        cfg.transfer,
        noise,
        book.ledger("transfer"),
    )?;
    Ok(ResBlockOutput {
        values: RealTensor::new(pre_transfer.shape().to_vec(), extracted)?,
        pre_transfer,
    })
}
