//! Classical real-arithmetic reference implementations.
//!
//! Straight-line `f64` loops, written independently of the emulated pipeline
//! (no shared kernels, no fixed point, no ledger): these are the ground truth
//! that exact-mode runs are compared against.
#![allow(clippy::needless_range_loop)]

use crate::tensor::RealTensor;

/// Same-padding cross-correlation with bias;
/// `x: (B, C_in, H, W)`, `kernel: (C_out, C_in, K, K)`.
pub fn conv2d(x: &RealTensor, kernel: &RealTensor, bias: &[f64]) -> RealTensor {
    let (b, c_in, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (c_out, _, k, _) = (
        kernel.shape()[0],
        kernel.shape()[1],
        kernel.shape()[2],
        kernel.shape()[3],
    );
    let half = (k / 2) as isize;
    let mut out = RealTensor::filled(vec![b, c_out, h, w], 0.0).unwrap();
    for bi in 0..b {
        for co in 0..c_out {
            for i in 0..h {
                for j in 0..w {
                    let mut acc = bias[co];
                    for ci in 0..c_in {
                        for di in 0..k {
                            for dj in 0..k {
                                let ii = i as isize + di as isize - half;
                                let jj = j as isize + dj as isize - half;
                                if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                                    continue;
                                }
                                acc += kernel.get(&[co, ci, di, dj])
                                    * x.get(&[bi, ci, ii as usize, jj as usize]);
                            }
                        }
                    }
                    out.set(&[bi, co, i, j], acc);
                }
            }
        }
    }
    out
}

/// Per-channel batch statistics of a `(B, C, H, W)` tensor: `(mean, var)`
/// per channel, population variance.
pub fn channel_stats(x: &RealTensor) -> Vec<(f64, f64)> {
    let (b, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let n = (b * h * w) as f64;
    (0..c)
        .map(|ci| {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for bi in 0..b {
                for i in 0..h {
                    for j in 0..w {
                        let v = *x.get(&[bi, ci, i, j]);
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

pub fn relu(x: &RealTensor) -> RealTensor {
    let data = x.data().iter().map(|v| v.max(0.0)).collect();
    RealTensor::new(x.shape().to_vec(), data).unwrap()
}

/// Residual block: conv -> batch norm (own statistics) -> relu -> shortcut
/// add -> relu.
pub fn residual_block(
    x: &RealTensor,
    kernel: &RealTensor,
    bias: &[f64],
    gamma: f64,
    beta: f64,
    eps: f64,
) -> RealTensor {
    let conv = conv2d(x, kernel, bias);
    let stats = channel_stats(&conv);
    let (b, c, h, w) = (
        conv.shape()[0],
        conv.shape()[1],
        conv.shape()[2],
        conv.shape()[3],
    );
    let mut out = RealTensor::filled(vec![b, c, h, w], 0.0).unwrap();
    for bi in 0..b {
        for ci in 0..c {
            let (mean, var) = stats[ci];
            let inv = 1.0 / (var + eps).sqrt();
            for i in 0..h {
                for j in 0..w {
                    let norm = gamma * (conv.get(&[bi, ci, i, j]) - mean) * inv + beta;
                    let main = norm.max(0.0);
                    let sum = main + x.get(&[bi, ci, i, j]);
                    out.set(&[bi, ci, i, j], sum.max(0.0));
                }
            }
        }
    }
    out
}

/// `x (n x k) . w (k x m)`, plus optional bias over the output columns.
pub fn matmul(x: &RealTensor, w: &RealTensor, bias: Option<&[f64]>) -> RealTensor {
    let (n, k) = (x.shape()[0], x.shape()[1]);
    let m = w.shape()[1];
    let mut out = RealTensor::filled(vec![n, m], 0.0).unwrap();
    for i in 0..n {
        for j in 0..m {
            let mut acc = bias.map_or(0.0, |b| b[j]);
            for l in 0..k {
                acc += x.get(&[i, l]) * w.get(&[l, j]);
            }
            out.set(&[i, j], acc);
        }
    }
    out
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(scores: &mut [f64], cols: usize) {
    for row in scores.chunks_mut(cols) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// Multi-head self-attention for `x: (B, N, d)` with `d x d` projections.
pub fn mhsa(
    x: &RealTensor,
    w_q: &RealTensor,
    w_k: &RealTensor,
    w_v: &RealTensor,
    w_o: &RealTensor,
    heads: usize,
) -> RealTensor {
    let (b, n, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let dk = d / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut out = RealTensor::filled(vec![b, n, d], 0.0).unwrap();
    for bi in 0..b {
        let rows = RealTensor::new(
            vec![n, d],
            (0..n * d).map(|i| x.data()[bi * n * d + i]).collect(),
        )
        .unwrap();
        let q = matmul(&rows, w_q, None);
        let k = matmul(&rows, w_k, None);
        let v = matmul(&rows, w_v, None);
        let mut concat = RealTensor::filled(vec![n, d], 0.0).unwrap();
        for h in 0..heads {
            let col0 = h * dk;
            let mut scores = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..dk {
                        acc += q.get(&[i, col0 + l]) * k.get(&[j, col0 + l]);
                    }
                    scores[i * n + j] = acc * scale;
                }
            }
            softmax_rows(&mut scores, n);
            for i in 0..n {
                for l in 0..dk {
                    let mut acc = 0.0;
                    for j in 0..n {
                        acc += scores[i * n + j] * v.get(&[j, col0 + l]);
                    }
                    concat.set(&[i, col0 + l], acc);
                }
            }
        }
        let projected = matmul(&concat, w_o, None);
        for i in 0..n {
            for j in 0..d {
                out.set(&[bi, i, j], *projected.get(&[i, j]));
            }
        }
    }
    out
}

/// Position-wise feed-forward: `relu(x W1 + b1) W2 + b2` over flattened
/// `(B*N, d)` rows.
pub fn ffn(
    x: &RealTensor,
    w1: &RealTensor,
    b1: &[f64],
    w2: &RealTensor,
    b2: &[f64],
) -> RealTensor {
    let hidden = matmul(x, w1, Some(b1));
    let hidden = relu(&hidden);
    matmul(&hidden, w2, Some(b2))
}

/// Per-row layer normalization with affine parameters.
pub fn layer_norm_rows(x: &RealTensor, gamma: f64, beta: f64, eps: f64) -> RealTensor {
    let cols = *x.shape().last().unwrap();
    let mut data = x.data().to_vec();
    for row in data.chunks_mut(cols) {
        let n = cols as f64;
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let inv = 1.0 / (var + eps).sqrt();
        for v in row.iter_mut() {
            *v = gamma * (*v - mean) * inv + beta;
        }
    }
    RealTensor::new(x.shape().to_vec(), data).unwrap()
}

/// Pre-norm transformer block:
/// `y = x + MHSA(LN(x))`, `out = y + FFN(LN(y))`.
#[allow(clippy::too_many_arguments)]
pub fn transformer_block(
    x: &RealTensor,
    w_q: &RealTensor,
    w_k: &RealTensor,
    w_v: &RealTensor,
    w_o: &RealTensor,
    heads: usize,
    w1: &RealTensor,
    b1: &[f64],
    w2: &RealTensor,
    b2: &[f64],
    ln_eps: f64,
) -> RealTensor {
    let (b, n, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let ln1 = layer_norm_rows(x, 1.0, 0.0, ln_eps);
    let attn = mhsa(&ln1, w_q, w_k, w_v, w_o, heads);
    let y_data: Vec<f64> = x
        .data()
        .iter()
        .zip(attn.data())
        .map(|(a, c)| a + c)
        .collect();
    let y = RealTensor::new(vec![b, n, d], y_data).unwrap();
    let ln2 = layer_norm_rows(&y, 1.0, 0.0, ln_eps);
    let flat = RealTensor::new(vec![b * n, d], ln2.data().to_vec()).unwrap();
    let f = ffn(&flat, w1, b1, w2, b2);
    let out_data: Vec<f64> = y
        .data()
        .iter()
        .zip(f.data())
        .map(|(a, c)| a + c)
        .collect();
    RealTensor::new(vec![b, n, d], out_data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_identity_kernel() {
        let x = RealTensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let k = RealTensor::new(vec![1, 1, 1, 1], vec![1.0]).unwrap();
        let y = conv2d(&x, &k, &[0.0]);
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let mut s = vec![1.0, 2.0, 3.0, -1.0, 0.0, 1.0];
        softmax_rows(&mut s, 3);
        for row in s.chunks(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn layer_norm_zero_mean_unit_var() {
        let x = RealTensor::new(vec![2, 4], vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 2.0, 7.0]).unwrap();
        let y = layer_norm_rows(&x, 1.0, 0.0, 0.0);
        for row in y.data().chunks(4) {
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| v * v).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_attention_averages_values() {
        // W_Q = W_K = 0 makes every score equal; attention averages rows of V
        let d = 2;
        let x = RealTensor::new(vec![1, 2, d], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let zero = RealTensor::filled(vec![d, d], 0.0).unwrap();
        let eye = RealTensor::new(vec![d, d], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = mhsa(&x, &zero, &zero, &eye, &eye, 1);
        for i in 0..2 {
            assert!((out.get(&[0, i, 0]) - 0.5).abs() < 1e-12);
            assert!((out.get(&[0, i, 1]) - 0.5).abs() < 1e-12);
        }
    }
}
