//! Tensor arithmetic: addition, tensor dot, per-item linear maps, and
//! convolution.

use super::cost::CostTable;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::resource::ResourceLedger;
use crate::tensor::DigitalTensor;

fn check_same_format(a: &DigitalTensor, b: &DigitalTensor) -> Result<()> {
    if a.format() != b.format() {
        return Err(Error::ShapeMismatch(
            "operands use different fixed-point formats".into(),
        ));
    }
    Ok(())
}

/// Element-wise sum. One adder depth layer: the elements live under an index
/// register and add in parallel.
pub fn qadd(
    a: &DigitalTensor,
    b: &DigitalTensor,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<DigitalTensor> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "qadd shapes {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    check_same_format(a, b)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.checked_add(y))
        .collect::<Result<Vec<_>>>()?;
    let bits = a.format().total_bits;
    ledger.add_t_depth(table.adder_tdepth(bits));
    let n = a.len() as u64;
    ledger.ancilla_alloc(n);
    ledger.ancilla_release(n);
    DigitalTensor::new(a.shape().to_vec(), data)
}

/// Tensor dot `R_{ijkl} = sum_mu S_{i mu j} T_{k mu l}` for
/// `S: (c_s, d, p)` and `T: (c_t, d, q)`, giving `(c_s, p, c_t, q)`.
///
/// The contraction runs sequentially over `mu` with round-to-nearest after
/// each multiply-accumulate; all output indices sit under index registers, so
/// the charge is `d` multiplier plus `d` adder depths.
pub fn tensor_dot(
    s: &DigitalTensor,
    t: &DigitalTensor,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<DigitalTensor> {
    if s.shape().len() != 3 || t.shape().len() != 3 {
        return Err(Error::ShapeMismatch(format!(
            "tensor_dot expects rank-3 operands, got {:?} and {:?}",
            s.shape(),
            t.shape()
        )));
    }
    check_same_format(s, t)?;
    let (cs, d, p) = (s.shape()[0], s.shape()[1], s.shape()[2]);
    let (ct, d2, q) = (t.shape()[0], t.shape()[1], t.shape()[2]);
    if d != d2 {
        return Err(Error::ShapeMismatch(format!(
            "contracted extents differ: {d} vs {d2}"
        )));
    }
    let format = s.format();
    let mut out = Vec::with_capacity(cs * p * ct * q);
    for i in 0..cs {
        for j in 0..p {
            for k in 0..ct {
                for l in 0..q {
                    let mut acc = FixedPoint::zero(format);
                    for mu in 0..d {
                        let prod = s.get(&[i, mu, j]).checked_mul(t.get(&[k, mu, l]))?;
                        acc = acc.checked_add(&prod)?;
                    }
                    out.push(acc);
                }
            }
        }
    }
    let bits = format.total_bits;
    ledger.add_t_depth(d as f64 * table.mac_tdepth(bits));
    let footprint = (cs * p * ct * q) as u64 + 1;
    ledger.ancilla_alloc(footprint);
    ledger.ancilla_release(footprint);
    DigitalTensor::new(vec![cs, p, ct, q], out)
}

/// Per-item linear map: applies `w` (`d_in x d_out`) to each row of
/// `x` (`n x d_in`), optionally seeding accumulators with a bias.
///
/// Items are parallel under the row index register, but the map itself runs
/// arithmetically: `d_out` output registers each accumulate over `d_in`
/// inputs, for `d_in * d_out` multiply-accumulate depth layers.
pub fn qlinear(
    x: &DigitalTensor,
    w: &DigitalTensor,
    bias: Option<&[FixedPoint]>,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<DigitalTensor> {
    if x.shape().len() != 2 || w.shape().len() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "qlinear expects rank-2 operands, got {:?} and {:?}",
            x.shape(),
            w.shape()
        )));
    }
    check_same_format(x, w)?;
    let (n, d_in) = (x.shape()[0], x.shape()[1]);
    let (d_in2, d_out) = (w.shape()[0], w.shape()[1]);
    if d_in != d_in2 {
        return Err(Error::ShapeMismatch(format!(
            "qlinear inner extents differ: {d_in} vs {d_in2}"
        )));
    }
    if let Some(b) = bias {
        if b.len() != d_out {
            return Err(Error::DimensionMismatch {
                expected: d_out,
                got: b.len(),
            });
        }
    }
    let format = x.format();
    let mut out = Vec::with_capacity(n * d_out);
    for row in 0..n {
        for o in 0..d_out {
            let mut acc = match bias {
                Some(b) => b[o],
                None => FixedPoint::zero(format),
            };
            for i in 0..d_in {
                let prod = x.get(&[row, i]).checked_mul(w.get(&[i, o]))?;
                acc = acc.checked_add(&prod)?;
            }
            out.push(acc);
        }
    }
    let bits = format.total_bits;
    ledger.add_t_depth((d_in * d_out) as f64 * table.mac_tdepth(bits));
    let footprint = (n * d_out) as u64 + 1;
    ledger.ancilla_alloc(footprint);
    ledger.ancilla_release(footprint);
    DigitalTensor::new(vec![n, d_out], out)
}

/// Same-padding cross-correlation with bias for `x: (B, C_in, H, W)` and
/// `kernel: (C_out, C_in, K, K)`; K must be odd.
///
/// Output positions are parallel under index registers; the kernel taps run
/// sequentially, so the charge is `C_in * K^2` multiply-accumulate depths.
#[allow(clippy::needless_range_loop)]
pub fn qconv(
    x: &DigitalTensor,
    kernel: &DigitalTensor,
    bias: &[FixedPoint],
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<DigitalTensor> {
    if x.shape().len() != 4 || kernel.shape().len() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "qconv expects rank-4 operands, got {:?} and {:?}",
            x.shape(),
            kernel.shape()
        )));
    }
    check_same_format(x, kernel)?;
    let (b, c_in, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (c_out, c_in2, kh, kw) = (
        kernel.shape()[0],
        kernel.shape()[1],
        kernel.shape()[2],
        kernel.shape()[3],
    );
    if c_in != c_in2 {
        return Err(Error::ShapeMismatch(format!(
            "kernel input channels {c_in2} do not match input {c_in}"
        )));
    }
    if kh != kw || kh.is_multiple_of(2) {
        return Err(Error::ShapeMismatch(format!(
            "kernel spatial extent must be odd and square, got {kh}x{kw}"
        )));
    }
    if bias.len() != c_out {
        return Err(Error::DimensionMismatch {
            expected: c_out,
            got: bias.len(),
        });
    }
    let half = kh / 2;
    let format = x.format();
    let mut out = Vec::with_capacity(b * c_out * h * w);
    for bi in 0..b {
        for co in 0..c_out {
            for i in 0..h {
                for j in 0..w {
                    let mut acc = bias[co];
                    for ci in 0..c_in {
                        for di in 0..kh {
                            for dj in 0..kw {
                                let ii = i as isize + di as isize - half as isize;
                                let jj = j as isize + dj as isize - half as isize;
                                if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
                                    continue; // zero padding
                                }
                                let prod = kernel
                                    .get(&[co, ci, di, dj])
                                    .checked_mul(x.get(&[bi, ci, ii as usize, jj as usize]))?;
                                acc = acc.checked_add(&prod)?;
                            }
                        }
                    }
                    out.push(acc);
                }
            }
        }
    }
    let bits = format.total_bits;
    ledger.add_t_depth((c_in * kh * kh) as f64 * table.mac_tdepth(bits));
    let footprint = (b * c_out * h * w) as u64 + 1;
    ledger.ancilla_alloc(footprint);
    ledger.ancilla_release(footprint);
    DigitalTensor::new(vec![b, c_out, h, w], out)
}
