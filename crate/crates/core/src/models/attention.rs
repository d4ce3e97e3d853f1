//! Multi-head self-attention, feed-forward, and the full transformer block
//! on the hybrid pipeline.
//!
//! Division of labor per head:
//! 1. Q/K/V projections run arithmetically as token-parallel `d x d` maps
//!    (`d^2` multiply-accumulate depth each).
//! 2. Scores `Q K^T / sqrt(d_k)` use the indexed dot product: `d_k`
//!    multiply-accumulate depth, parallel over the `(i, j)` index registers
//!    and the head register.
//! 3. The score matrix is measured row-wise and the softmax runs
//!    classically with row-max subtraction.
//! 4. The classical attention matrix is block-encoded and applied to each
//!    value column; post-selection success probabilities are recorded and
//!    inflate the block-boundary sampling shots multiplicatively.
//! 5. Heads concatenate by a linear combination of the per-head outputs into
//!    disjoint blocks (uniform combination coefficients acting on the
//!    unnormalized head outputs, i.e. block weights equal to the recovered
//!    head norms), then the output projection runs arithmetically.
//!
//! Stage ledgers: `projection`, `scores`, `aggregation`, `layernorm`,
//! `residual`, `ffn`, `transfer`. Arithmetic parallel across batch, token,
//! and head index registers charges once; sampling and block-encoding
//! applications charge per execution.

use crate::dtm::{DataTransfer, TransferProtocol};
use crate::error::{Error, Result};
use crate::fixed::{FixedPoint, FixedPointFormat};
use crate::qam::{qadd, qbn, qlinear, qrelu, tensor_dot, CostTable};
use crate::qlam::{
    apply_block_encoding, lcu_concat, prepare_state, AmplitudeState, BlockEncoding, NoiseModel,
    PrepCostModel,
};
use crate::resource::{LedgerBook, ResourceLedger};
use crate::scalar::l2_norm;
use crate::tensor::{DigitalTensor, RealTensor};

#[derive(Debug, Clone, Copy)]
pub struct AttnConfig {
    pub batch: usize,
    pub tokens: usize,
    pub embed: usize,
    pub heads: usize,
    pub format: FixedPointFormat,
    /// Protocol for score-row measurement and the block-boundary transfer.
    pub transfer: TransferProtocol,
    pub ln_eps: f64,
}

impl AttnConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.batch, self.tokens, self.embed, self.heads].contains(&0) {
            return Err(Error::InvalidDimension(
                "attention extents must be positive".into(),
            ));
        }
        if !self.embed.is_multiple_of(self.heads) {
            return Err(Error::ShapeMismatch(format!(
                "embedding dim {} not divisible by {} heads",
                self.embed, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.embed / self.heads
    }
}

/// The four `d x d` projection matrices.
#[derive(Debug, Clone)]
pub struct AttnWeights {
    pub w_q: RealTensor,
    pub w_k: RealTensor,
    pub w_v: RealTensor,
    pub w_o: RealTensor,
}

impl AttnWeights {
    pub fn validate(&self, embed: usize) -> Result<()> {
        for (name, w) in [
            ("w_q", &self.w_q),
            ("w_k", &self.w_k),
            ("w_v", &self.w_v),
            ("w_o", &self.w_o),
        ] {
            if w.shape() != [embed, embed] {
                return Err(Error::ShapeMismatch(format!(
                    "{name} must be {embed}x{embed}, got {:?}",
                    w.shape()
                )));
            }
            if w.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::DomainError(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    pub fn zeros(embed: usize) -> Self {
        let z = RealTensor::filled(vec![embed, embed], 0.0).unwrap();
        Self {
            w_q: z.clone(),
            w_k: z.clone(),
            w_v: z.clone(),
            w_o: z,
        }
    }

    pub fn seeded(embed: usize, scale: f64, rng: &mut crate::rng::RandomSource) -> Self {
        let mut draw = || {
            RealTensor::new(
                vec![embed, embed],
                (0..embed * embed).map(|_| scale * rng.normal()).collect(),
            )
            .unwrap()
        };
        Self {
            w_q: draw(),
            w_k: draw(),
            w_v: draw(),
            w_o: draw(),
        }
    }
}

/// Feed-forward weights: `d -> hidden -> d`.
#[derive(Debug, Clone)]
pub struct FfnWeights {
    pub w1: RealTensor,
    pub b1: Vec<f64>,
    pub w2: RealTensor,
    pub b2: Vec<f64>,
}

impl FfnWeights {
    pub fn validate(&self) -> Result<()> {
        let hidden = self.w1.shape()[1];
        if self.w2.shape()[0] != hidden {
            return Err(Error::ShapeMismatch(format!(
                "ffn shapes disagree: w1 {:?}, w2 {:?}",
                self.w1.shape(),
                self.w2.shape()
            )));
        }
        if self.b1.len() != hidden || self.b2.len() != self.w2.shape()[1] {
            return Err(Error::ShapeMismatch("ffn bias lengths disagree".into()));
        }
        Ok(())
    }

    pub fn zeros(embed: usize, hidden: usize) -> Self {
        Self {
            w1: RealTensor::filled(vec![embed, hidden], 0.0).unwrap(),
            b1: vec![0.0; hidden],
            w2: RealTensor::filled(vec![hidden, embed], 0.0).unwrap(),
            b2: vec![0.0; embed],
        }
    }

    pub fn seeded(
        embed: usize,
        hidden: usize,
        scale: f64,
        rng: &mut crate::rng::RandomSource,
    ) -> Self {
        Self {
            w1: RealTensor::new(
                vec![embed, hidden],
                (0..embed * hidden).map(|_| scale * rng.normal()).collect(),
            )
            .unwrap(),
            b1: (0..hidden).map(|_| 0.1 * rng.normal()).collect(),
            w2: RealTensor::new(
                vec![hidden, embed],
                (0..hidden * embed).map(|_| scale * rng.normal()).collect(),
            )
            .unwrap(),
            b2: (0..embed).map(|_| 0.1 * rng.normal()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MhsaOutput {
    pub values: RealTensor,
    /// Multiplicative sampling-shot inflation from post-selected
    /// block-encoding applications (1 when every application succeeded with
    /// certainty).
    pub shot_inflation: f64,
}

/// Row-wise softmax with max subtraction (classical post-processing of the
/// measured scores).
fn softmax_row(row: &mut [f64]) -> Result<()> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::DegenerateState(
            "softmax row underflowed to zero".into(),
        ));
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
    Ok(())
}

fn transpose2(t: &RealTensor) -> RealTensor {
    let (r, c) = (t.shape()[0], t.shape()[1]);
    let mut data = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            data[j * r + i] = *t.get(&[i, j]);
        }
    }
    RealTensor::new(vec![c, r], data).unwrap()
}

/// Multi-head self-attention forward pass. `dt_scores` must have dimension
/// `tokens` (score rows are measured independently).
pub fn mhsa_forward(
    x: &RealTensor,
    weights: &AttnWeights,
    cfg: &AttnConfig,
    dt_scores: &DataTransfer,
    table: &CostTable,
    noise: &mut NoiseModel,
    book: &mut LedgerBook,
) -> Result<MhsaOutput> {
    cfg.validate()?;
    weights.validate(cfg.embed)?;
    let (b, n, d) = (cfg.batch, cfg.tokens, cfg.embed);
    if x.shape() != [b, n, d] {
        return Err(Error::ShapeMismatch(format!(
            "input shape {:?} does not match the config",
            x.shape()
        )));
    }
    if dt_scores.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: dt_scores.dim(),
        });
    }
    let dk = cfg.head_dim();
    let bits = cfg.format.total_bits;

    // token-parallel projections
    let flat = RealTensor::new(vec![b * n, d], x.data().to_vec())?.encode(cfg.format)?;
    let wq = weights.w_q.encode(cfg.format)?;
    let wk = weights.w_k.encode(cfg.format)?;
    let wv = weights.w_v.encode(cfg.format)?;
    let q = qlinear(&flat, &wq, None, table, book.ledger("projection"))?;
    let k = qlinear(&flat, &wk, None, table, book.ledger("projection"))?;
    let v = qlinear(&flat, &wv, None, table, book.ledger("projection"))?;
    let v_values = v.decode();

    let scale_fp = FixedPoint::encode(1.0 / (dk as f64).sqrt(), cfg.format)?;
    let prep_plog = ((n as f64).log2().powi(2)).max(1.0);

    let mut scratch = ResourceLedger::new();
    let mut shot_inflation = 1.0f64;
    let mut concat_all = RealTensor::filled(vec![b * n, d], 0.0)?;
    for bi in 0..b {
        let mut head_states: Vec<AmplitudeState> = Vec::new();
        let mut head_norms: Vec<f64> = Vec::new();
        let mut head_values: Vec<Vec<f64>> = Vec::new(); // (n * dk) per head
        for h in 0..cfg.heads {
            let col0 = h * dk;
            let sub = |t: &DigitalTensor, i: usize, l: usize| *t.get(&[bi * n + i, col0 + l]);
            let q_h = DigitalTensor::new(
                vec![n, dk, 1],
                (0..n)
                    .flat_map(|i| (0..dk).map(move |l| (i, l)))
                    .map(|(i, l)| sub(&q, i, l))
                    .collect(),
            )?;
            let k_h = DigitalTensor::new(
                vec![n, dk, 1],
                (0..n)
                    .flat_map(|i| (0..dk).map(move |l| (i, l)))
                    .map(|(i, l)| sub(&k, i, l))
                    .collect(),
            )?;
            // indexed dot product, parallel over (i, j) and the head register
            let first = bi == 0 && h == 0;
            let ledger = if first {
                book.ledger("scores")
            } else {
                &mut scratch
            };
            let raw_scores = tensor_dot(&q_h, &k_h, table, ledger)?;
            if first {
                book.ledger("scores").add_t_depth(table.multiplier_tdepth(bits));
            }
            let mut scores = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    scores[i * n + j] = raw_scores
                        .get(&[i, 0, j, 0])
                        .checked_mul(&scale_fp)?
                        .decode();
                }
            }

            // measured scores, classical softmax
            let mut attn = vec![0.0; n * n];
            for i in 0..n {
                let snap = dt_scores.snapshot_values(
                    &scores[i * n..(i + 1) * n],
                    cfg.transfer,
                    noise,
                    book.ledger("transfer"),
                )?;
                attn[i * n..(i + 1) * n].copy_from_slice(&snap);
                softmax_row(&mut attn[i * n..(i + 1) * n])?;
            }

            // dense aggregation through the block-encoded attention matrix
            let be = BlockEncoding::with_auto_alpha(attn, n, n, 0.0)?;
            let mut out_cols = vec![0.0; n * dk];
            for l in 0..dk {
                let col: Vec<f64> = (0..n)
                    .map(|i| *v_values.get(&[bi * n + i, col0 + l]))
                    .collect();
                let norm = l2_norm(&col);
                if norm < 1e-300 {
                    continue; // zero value column contributes nothing
                }
                let psi = prepare_state(&col, PrepCostModel::Fixed(prep_plog))?;
                let (out_state, success) =
                    apply_block_encoding(&be, &psi, noise, book.ledger("aggregation"))?;
                shot_inflation *= 1.0 / success;
                let scale_back = success.sqrt() * be.alpha() * norm;
                for i in 0..n {
                    out_cols[i * dk + l] = out_state.amplitudes()[i] * scale_back;
                }
            }
            let head_norm = l2_norm(&out_cols);
            if head_norm > 1e-300 {
                head_states.push(prepare_state(&out_cols, PrepCostModel::Fixed(prep_plog))?);
                head_norms.push(head_norm);
            }
            head_values.push(out_cols);
        }

        // concatenation of head outputs into disjoint blocks; the combine
        // cost charges once (batch register parallel)
        if !head_states.is_empty() {
            let ledger = if bi == 0 {
                book.ledger("aggregation")
            } else {
                &mut scratch
            };
            lcu_concat(&head_states, &head_norms, table.adder_tdepth(bits), ledger)?;
        }
        for (h, vals) in head_values.iter().enumerate() {
            for i in 0..n {
                for l in 0..dk {
                    concat_all.set(&[bi * n + i, h * dk + l], vals[i * dk + l]);
                }
            }
        }
    }

    // output projection
    let concat_fp = concat_all.encode(cfg.format)?;
    let wo = weights.w_o.encode(cfg.format)?;
    let projected = qlinear(&concat_fp, &wo, None, table, book.ledger("projection"))?;
    let values = RealTensor::new(vec![b, n, d], projected.decode().into_data())?;
    Ok(MhsaOutput {
        values,
        shot_inflation,
    })
}

/// Position-wise feed-forward: `relu(x W1 + b1) W2 + b2` applied to each row
/// of `x` (`rows x d`), all rows parallel under the token index register.
pub fn ffn_forward(
    x: &RealTensor,
    weights: &FfnWeights,
    format: FixedPointFormat,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<RealTensor> {
    weights.validate()?;
    let d_in = weights.w1.shape()[0];
    let rows = x.len() / d_in;
    if rows * d_in != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "input of {} entries is not a multiple of d_in {d_in}",
            x.len()
        )));
    }
    let flat = RealTensor::new(vec![rows, d_in], x.data().to_vec())?.encode(format)?;
    let w1 = weights.w1.encode(format)?;
    let w2 = weights.w2.encode(format)?;
    let b1 = weights
        .b1
        .iter()
        .map(|&v| FixedPoint::encode(v, format))
        .collect::<Result<Vec<_>>>()?;
    let b2 = weights
        .b2
        .iter()
        .map(|&v| FixedPoint::encode(v, format))
        .collect::<Result<Vec<_>>>()?;
    let hidden = qlinear(&flat, &w1, Some(&b1), table, ledger)?;
    let hidden = qrelu(&hidden, table, ledger);
    let out = qlinear(&hidden, &w2, Some(&b2), table, ledger)?;
    let mut shape = x.shape().to_vec();
    *shape.last_mut().unwrap() = weights.w2.shape()[1];
    RealTensor::new(shape, out.decode().into_data())
}

#[derive(Debug, Clone)]
pub struct TransformerOutput {
    /// Values after the block-boundary transfer cycle.
    pub values: RealTensor,
    /// Decoded output before the boundary transfer.
    pub pre_transfer: RealTensor,
    pub shot_inflation: f64,
}

/// Transfer machinery a transformer block needs: per-token rows (layer
/// norm statistics), score rows, and the block output.
#[derive(Debug, Clone)]
pub struct TransformerDtm {
    pub tokens: DataTransfer,
    pub scores: DataTransfer,
    pub output: DataTransfer,
}

impl TransformerDtm {
    pub fn new(batch: usize, tokens: usize, embed: usize) -> Result<Self> {
        Ok(Self {
            tokens: DataTransfer::new(embed)?,
            scores: DataTransfer::new(tokens)?,
            output: DataTransfer::new(batch * tokens * embed)?,
        })
    }
}

/// Token-wise layer norm with statistics from measured token rows; the
/// normalization arithmetic runs once across the token index register.
fn hybrid_layer_norm(
    x: &RealTensor,
    cfg: &AttnConfig,
    dt_tokens: &DataTransfer,
    table: &CostTable,
    noise: &mut NoiseModel,
    book: &mut LedgerBook,
) -> Result<RealTensor> {
    let d = cfg.embed;
    let rows = x.len() / d;
    let x_fp = RealTensor::new(vec![rows, d], x.data().to_vec())?.encode(cfg.format)?;
    let mut scratch = ResourceLedger::new();
    let mut out = Vec::with_capacity(rows * d);
    for r in 0..rows {
        let row_values: Vec<f64> = (0..d).map(|j| x_fp.get(&[r, j]).decode()).collect();
        let snap = dt_tokens.snapshot_values(
            &row_values,
            cfg.transfer,
            noise,
            book.ledger("transfer"),
        )?;
        let n = d as f64;
        let mean = snap.iter().sum::<f64>() / n;
        let var = (snap.iter().map(|v| v * v).sum::<f64>() / n - mean * mean).max(0.0);
        let row_fp = DigitalTensor::new(
            vec![d],
            (0..d).map(|j| *x_fp.get(&[r, j])).collect(),
        )?;
        let ledger = if r == 0 {
            book.ledger("layernorm")
        } else {
            &mut scratch
        };
        let normed = qbn(&row_fp, mean, var, 1.0, 0.0, cfg.ln_eps, table, ledger)?;
        out.extend(normed.decode().into_data());
    }
    RealTensor::new(x.shape().to_vec(), out)
}

/// Full block: `y = x + MHSA(LN(x))`, `out = y + FFN(LN(y))`, then the
/// block-boundary transfer with post-selection shot inflation.
#[allow(clippy::too_many_arguments)]
pub fn transformer_block_forward(
    x: &RealTensor,
    attn_weights: &AttnWeights,
    ffn_weights: &FfnWeights,
    cfg: &AttnConfig,
    dtm: &TransformerDtm,
    table: &CostTable,
    noise: &mut NoiseModel,
    book: &mut LedgerBook,
) -> Result<TransformerOutput> {
    cfg.validate()?;
    let (b, n, d) = (cfg.batch, cfg.tokens, cfg.embed);
    if x.shape() != [b, n, d] {
        return Err(Error::ShapeMismatch(format!(
            "input shape {:?} does not match the config",
            x.shape()
        )));
    }

    let ln1 = hybrid_layer_norm(x, cfg, &dtm.tokens, table, noise, book)?;
    let attn = mhsa_forward(&ln1, attn_weights, cfg, &dtm.scores, table, noise, book)?;
    let x_fp = x.encode(cfg.format)?;
    let attn_fp = attn.values.encode(cfg.format)?;
    let y = qadd(&x_fp, &attn_fp, table, book.ledger("residual"))?;
    let y_values = y.decode();

    let ln2 = hybrid_layer_norm(&y_values, cfg, &dtm.tokens, table, noise, book)?;
    let f = ffn_forward(&ln2, ffn_weights, cfg.format, table, book.ledger("ffn"))?;
    let f_fp = f.encode(cfg.format)?;
    let out = qadd(&y, &f_fp, table, book.ledger("residual"))?;
    let pre_transfer = out.decode();

    // block boundary: measured extraction, shots inflated by the recorded
    // post-selection failures
    let mut boundary = ResourceLedger::new();
    let extracted = dtm.output.snapshot_values(
        pre_transfer.data(),
        cfg.transfer,
        noise,
        &mut boundary,
    )?;
    boundary.shots *= attn.shot_inflation;
    book.ledger("transfer").merge(&boundary);

    Ok(TransformerOutput {
        values: RealTensor::new(pre_transfer.shape().to_vec(), extracted)?,
        pre_transfer,
        shot_inflation: attn.shot_inflation,
    })
}

/// QAM path of the linear-layer backward pass: `dX = W^T dY`, token-parallel.
/// Exact up to fixed point.
pub fn backprop_input_grad(
    w: &RealTensor,
    dy: &RealTensor,
    format: FixedPointFormat,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<RealTensor> {
    let dy_t = transpose2(dy).encode(format)?;
    let w_fp = w.encode(format)?;
    let dx_t = qlinear(&dy_t, &w_fp, None, table, ledger)?;
    Ok(transpose2(&dx_t.decode()))
}

/// QLAM path of the backward pass: every weight-gradient entry
/// `dW_ij = <dY_i, X_j>` is an `N`-dimensional inner product, estimated to
/// `delta` and scaled by the row norms, for an entry-wise error of at most
/// `delta * ||dY_i|| * ||X_j||` in the bounded mode.
pub fn backprop_weight_grad(
    x: &RealTensor,
    dy: &RealTensor,
    delta: f64,
    noise: &mut NoiseModel,
    ledger: &mut ResourceLedger,
) -> Result<RealTensor> {
    let (d, n) = (dy.shape()[0], dy.shape()[1]);
    if x.shape()[1] != n {
        return Err(Error::ShapeMismatch(format!(
            "x {:?} and dy {:?} disagree on the sample count",
            x.shape(),
            dy.shape()
        )));
    }
    let d_x = x.shape()[0];
    let prep = ((n as f64).log2().powi(2)).max(1.0);
    let row = |t: &RealTensor, i: usize| -> Vec<f64> {
        (0..n).map(|j| *t.get(&[i, j])).collect()
    };
    let mut dw = vec![0.0; d * d_x];
    for i in 0..d {
        let dy_row = row(dy, i);
        let dy_norm = l2_norm(&dy_row);
        if dy_norm < 1e-300 {
            continue;
        }
        let dy_state = prepare_state(&dy_row, PrepCostModel::Fixed(prep))?;
        for j in 0..d_x {
            let x_row = row(x, j);
            let x_norm = l2_norm(&x_row);
            if x_norm < 1e-300 {
                continue;
            }
            let x_state = prepare_state(&x_row, PrepCostModel::Fixed(prep))?;
            let est = crate::qlam::inner_product_estimate(
                &dy_state, &x_state, delta, noise, ledger,
            )?;
            dw[i * d_x + j] = est * dy_norm * x_norm;
        }
    }
    RealTensor::new(vec![d, d_x], dw)
}

/// Backward pass of `Y = W X` (`W: d x d`, `X: d x N`): returns
/// `(dX, dW)` given the upstream gradient `dY`.
#[allow(clippy::too_many_arguments)]
pub fn backprop_linear(
    w: &RealTensor,
    x: &RealTensor,
    dy: &RealTensor,
    delta: f64,
    format: FixedPointFormat,
    table: &CostTable,
    noise: &mut NoiseModel,
    ledger: &mut ResourceLedger,
) -> Result<(RealTensor, RealTensor)> {
    if w.shape()[1] != x.shape()[0] || dy.shape() != [w.shape()[0], x.shape()[1]] {
        return Err(Error::ShapeMismatch(format!(
            "w {:?}, x {:?}, dy {:?} do not compose",
            w.shape(),
            x.shape(),
            dy.shape()
        )));
    }
    let dx = backprop_input_grad(w, dy, format, table, ledger)?;
    let dw = backprop_weight_grad(x, dy, delta, noise, ledger)?;
    Ok((dx, dw))
}
