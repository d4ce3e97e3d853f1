//! Element-wise routines: ReLU, Newton reciprocal, function-value binary
//! expansion arccos, and batch normalization.

use super::cost::CostTable;
use crate::error::{Error, Result};
use crate::fixed::FixedPoint;
use crate::resource::ResourceLedger;
use crate::tensor::DigitalTensor;

/// Element-wise `max(0, x)`; exact in fixed point. A sign-controlled copy
/// writes each output register, so the charge is one copy plus one
/// comparator depth; the inputs are uncomputed afterwards.
pub fn qrelu(
    x: &DigitalTensor,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> DigitalTensor {
    let data: Vec<FixedPoint> = x.data().iter().map(|v| v.relu()).collect();
    let bits = x.format().total_bits;
    ledger.add_t_depth(table.copy_tdepth(bits) + table.comparator_tdepth(bits));
    let n = x.len() as u64;
    ledger.ancilla_alloc(n);
    ledger.ancilla_release(n);
    DigitalTensor::new(x.shape().to_vec(), data).expect("shape preserved")
}

/// Real-arithmetic trace of the reciprocal iteration
/// `z_{k+1} = z_k (2 - x z_k)` starting from `z_0 = x0`. Reference for the
/// fixed-point path and for convergence-order checks.
pub fn newton_reciprocal_iterates(x: f64, x0: f64, iters: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(iters);
    let mut z = x0;
    for _ in 0..iters {
        z = z * (2.0 - x * z);
        out.push(z);
    }
    out
}

/// Iteration count that drives the seed error `e_0 <= 1/2` below one unit in
/// the last place of an `f`-fraction-bit format: `2^iters >= f + 1`.
pub fn newton_iters_for_fraction_bits(frac_bits: u32) -> usize {
    let mut iters = 1usize;
    while (1u64 << iters) < (frac_bits as u64 + 1) {
        iters += 1;
    }
    iters
}

/// Reciprocal of a positive fixed-point value with no domain gate: the input
/// is pre-scaled into (1/2, 1] by power-of-two shifts (register relabeling,
/// not charged), iterated from seed 1, and the shift undone on the result.
/// Pre-scaling keeps the seed error at most 1/2, so convergence is monotone.
pub(crate) fn reciprocal_prescaled(
    x: FixedPoint,
    iters: usize,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<FixedPoint> {
    if x.raw() <= 0 {
        return Err(Error::DomainError(format!(
            "reciprocal of non-positive value {}",
            x.decode()
        )));
    }
    let mut y = x;
    let mut shift = 0i32;
    while y.decode() > 1.0 {
        y = y.checked_shift(-1)?;
        shift -= 1;
    }
    while y.decode() <= 0.5 {
        y = y.checked_shift(1)?;
        shift += 1;
    }
    let format = x.format();
    let two = FixedPoint::encode(2.0, format)?;
    let mut z = FixedPoint::one(format)?;
    for _ in 0..iters {
        let t = y.checked_mul(&z)?;
        let u = two.checked_sub(&t)?;
        z = z.checked_mul(&u)?;
    }
    let bits = format.total_bits;
    ledger.add_t_depth(
        iters as f64 * (2.0 * table.multiplier_tdepth(bits) + table.adder_tdepth(bits)),
    );
    ledger.ancilla_alloc(3);
    ledger.ancilla_release(3);
    // 1/x = 2^shift * (1/y)
    z.checked_shift(shift)
}

/// Newton reciprocal `x -> 1/x` for `x` in (0, 2), the convergence region of
/// the seed `z_0 = 1`.
pub fn reciprocal_newton(
    x: FixedPoint,
    iters: usize,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<FixedPoint> {
    let v = x.decode();
    if v <= 0.0 || v >= 2.0 {
        return Err(Error::DomainError(format!(
            "reciprocal domain is (0, 2), got {v}"
        )));
    }
    reciprocal_prescaled(x, iters, table, ledger)
}

/// Arc cosine by function-value binary expansion.
///
/// With `t = arccos(x) / pi`, the update `z -> 2 z^2 - 1` (for `z > 0`) or
/// `z -> 1 - 2 z^2` (otherwise) acts on `t` as the binary shift map
/// `t -> 2t mod 1`, and the branch taken at step `k` is exactly bit `k` of
/// `t`: `bit_k = [z_k <= 0]`. Decoding `K` bits gives `arccos(x)` to
/// `pi * 2^-K` plus the fixed-point floor.
///
/// The intermediate `2 z^2` needs two integer bits, so the format must have
/// `total_bits - frac_bits >= 3`.
pub fn arccos_qfbe(
    x: FixedPoint,
    k_iters: usize,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<FixedPoint> {
    let v = x.decode();
    if v.abs() > 1.0 {
        return Err(Error::DomainError(format!(
            "arccos domain is [-1, 1], got {v}"
        )));
    }
    let format = x.format();
    if format.total_bits - format.frac_bits < 3 {
        return Err(Error::DomainError(
            "arccos needs at least two integer bits for the 2z^2 intermediate".into(),
        ));
    }
    let one = FixedPoint::one(format)?;
    let mut z = x;
    let mut t = 0.0f64; // decoded theta / pi, a dyadic rational
    let mut weight = 0.5f64;
    for _ in 0..k_iters {
        let bit = z.raw() <= 0;
        if bit {
            t += weight;
        }
        weight *= 0.5;
        let sq = z.checked_mul(&z)?;
        let two_sq = sq.checked_shift(1)?;
        z = if bit {
            one.checked_sub(&two_sq)?
        } else {
            two_sq.checked_sub(&one)?
        };
    }
    let bits = format.total_bits;
    ledger.add_t_depth(
        k_iters as f64
            * (table.multiplier_tdepth(bits)
                + table.adder_tdepth(bits)
                + table.comparator_tdepth(bits)),
    );
    ledger.ancilla_alloc(k_iters as u64 + 2);
    ledger.ancilla_release(k_iters as u64 + 2);
    FixedPoint::encode(std::f64::consts::PI * t, format)
}

/// Batch normalization `y -> gamma * (y - mu) / sqrt(sigma2 + eps) + beta`.
///
/// The inverse square root runs digitally: a digit-recurrence square root
/// (`f` comparator+adder stages) followed by the pre-scaled Newton
/// reciprocal. The element-wise affine applies in parallel: two multipliers
/// and two adders of depth.
#[allow(clippy::too_many_arguments)]
pub fn qbn(
    y: &DigitalTensor,
    mu: f64,
    sigma2: f64,
    gamma: f64,
    beta: f64,
    eps: f64,
    table: &CostTable,
    ledger: &mut ResourceLedger,
) -> Result<DigitalTensor> {
    debug_assert!(sigma2 >= 0.0 && eps > 0.0);
    let format = y.format();
    let mut var = FixedPoint::encode(sigma2.max(0.0) + eps, format)?;
    if var.raw() == 0 {
        // eps below the register resolution; clamp to one lsb so the
        // reciprocal stays defined
        var = FixedPoint::from_raw(1, format)?;
    }
    let sigma = var.sqrt_floor()?;
    ledger.add_t_depth(
        format.frac_bits as f64
            * (table.comparator_tdepth(format.total_bits) + table.adder_tdepth(format.total_bits)),
    );
    let inv_sigma = reciprocal_prescaled(
        sigma,
        newton_iters_for_fraction_bits(format.frac_bits),
        table,
        ledger,
    )?;
    let mu_fp = FixedPoint::encode(mu, format)?;
    let gamma_fp = FixedPoint::encode(gamma, format)?;
    let beta_fp = FixedPoint::encode(beta, format)?;
    let data = y
        .data()
        .iter()
        .map(|v| {
            let centered = v.checked_sub(&mu_fp)?;
            let scaled = centered.checked_mul(&inv_sigma)?;
            scaled.checked_mul(&gamma_fp)?.checked_add(&beta_fp)
        })
        .collect::<Result<Vec<_>>>()?;
    let bits = format.total_bits;
    ledger.add_t_depth(2.0 * table.multiplier_tdepth(bits) + 2.0 * table.adder_tdepth(bits));
    let n = y.len() as u64;
    ledger.ancilla_alloc(n);
    ledger.ancilla_release(n);
    DigitalTensor::new(y.shape().to_vec(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::FixedPointFormat;
    use crate::tensor::RealTensor;

    fn fmt(b: u32, f: u32) -> FixedPointFormat {
        FixedPointFormat::new(b, f).unwrap()
    }

    #[test]
    fn relu_examples() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(32, 16);

        let pos = RealTensor::new(vec![3], vec![0.5, 1.0, 7.25])
            .unwrap()
            .encode(format)
            .unwrap();
        assert_eq!(
            qrelu(&pos, &table, &mut ledger).decode().data(),
            &[0.5, 1.0, 7.25]
        );

        // both -2 and -5 map to 0
        let neg = RealTensor::new(vec![2], vec![-2.0, -5.0])
            .unwrap()
            .encode(format)
            .unwrap();
        assert_eq!(qrelu(&neg, &table, &mut ledger).decode().data(), &[0.0, 0.0]);

        let mixed = RealTensor::new(vec![3], vec![-1.5, 0.0, 2.25])
            .unwrap()
            .encode(format)
            .unwrap();
        assert_eq!(
            qrelu(&mixed, &table, &mut ledger).decode().data(),
            &[0.0, 0.0, 2.25]
        );
    }

    #[test]
    fn relu_charges_copy_plus_comparator_and_balances_ancillas() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(32, 16);
        let x = RealTensor::new(vec![4], vec![-1.0, 2.0, -3.0, 4.0])
            .unwrap()
            .encode(format)
            .unwrap();
        let live_before = ledger.ancilla_live;
        qrelu(&x, &table, &mut ledger);
        assert_eq!(
            ledger.t_depth,
            table.copy_tdepth(32) + table.comparator_tdepth(32)
        );
        assert_eq!(ledger.ancilla_live, live_before);
        assert_eq!(ledger.ancilla_high_water, 4);
    }

    #[test]
    fn reciprocal_fixed_point_of_one() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let one = FixedPoint::encode(1.0, fmt(48, 32)).unwrap();
        for iters in [1, 3, 6] {
            let r = reciprocal_newton(one, iters, &table, &mut ledger).unwrap();
            assert_eq!(r.decode(), 1.0);
        }
    }

    #[test]
    fn reciprocal_iterate_trace_for_one_half() {
        // hand-iterated update rule with z0 = 1: 1.5, 1.875, 1.9921875
        let trace = newton_reciprocal_iterates(0.5, 1.0, 3);
        assert_eq!(trace, vec![1.5, 1.875, 1.9921875]);
    }

    #[test]
    fn reciprocal_converges_to_four_thirds() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let x = FixedPoint::encode(0.75, fmt(48, 32)).unwrap();
        let r = reciprocal_newton(x, 6, &table, &mut ledger).unwrap();
        assert!((r.decode() - 4.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn reciprocal_charges_documented_composition() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let x = FixedPoint::encode(0.75, fmt(32, 16)).unwrap();
        reciprocal_newton(x, 4, &table, &mut ledger).unwrap();
        assert_eq!(
            ledger.t_depth,
            4.0 * (2.0 * table.multiplier_tdepth(32) + table.adder_tdepth(32))
        );
    }

    #[test]
    fn reciprocal_domain_errors() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(32, 16);
        for v in [0.0, -0.5, 2.0, 3.5] {
            let x = FixedPoint::encode(v, format).unwrap();
            assert!(matches!(
                reciprocal_newton(x, 3, &table, &mut ledger),
                Err(Error::DomainError(_))
            ));
        }
    }

    #[test]
    fn newton_value_error_contracts_quadratically() {
        // |z_{k+1} - 1/x| = x |z_k - 1/x|^2 in real arithmetic
        let mut rng = crate::rng::RandomSource::new(31);
        for _ in 0..200 {
            let x = rng.uniform_in(0.05, 1.95);
            let trace = newton_reciprocal_iterates(x, 1.0, 8);
            let mut prev = (1.0 - 1.0 / x).abs();
            for z in trace {
                let e = (z - 1.0 / x).abs();
                assert!(e <= x * prev * prev + 1e-12);
                prev = e;
            }
        }
    }

    #[test]
    fn prescaling_covers_positive_values_beyond_two() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(48, 24);
        for v in [0.01, 0.4, 2.5, 7.0, 100.0] {
            let x = FixedPoint::encode(v, format).unwrap();
            let iters = newton_iters_for_fraction_bits(24);
            let r = reciprocal_prescaled(x, iters, &table, &mut ledger).unwrap();
            let want = 1.0 / x.decode();
            assert!(
                (r.decode() - want).abs() <= 4.0 * format.resolution() / v.min(1.0),
                "v={v} got {} want {want}",
                r.decode()
            );
        }
    }

    #[test]
    fn arccos_endpoint_and_midpoint_values() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(56, 48);
        let one = FixedPoint::encode(1.0, format).unwrap();
        assert_eq!(arccos_qfbe(one, 30, &table, &mut ledger).unwrap().decode(), 0.0);

        let zero = FixedPoint::encode(0.0, format).unwrap();
        let r = arccos_qfbe(zero, 30, &table, &mut ledger).unwrap().decode();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-9);

        let half = FixedPoint::encode(0.5, format).unwrap();
        let r = arccos_qfbe(half, 30, &table, &mut ledger).unwrap().decode();
        #[allow(clippy::approx_constant)] // frozen reference decimal
        let want = 1.047_197_6;
        assert!((r - want).abs() < 1e-6);
    }

    #[test]
    fn arccos_matches_reference_oracle_on_random_inputs() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(56, 48);
        let k = 30;
        let bound = std::f64::consts::PI * (0.5f64).powi(k as i32)
            + k as f64 * 4.0 * format.resolution();
        let mut rng = crate::rng::RandomSource::new(77);
        for _ in 0..300 {
            let v = rng.uniform_in(-1.0, 1.0);
            let x = FixedPoint::encode(v, format).unwrap();
            let got = arccos_qfbe(x, k, &table, &mut ledger).unwrap().decode();
            let want = x.decode().acos();
            assert!((got - want).abs() <= bound, "x={v}: {got} vs {want}");
        }
    }

    #[test]
    fn arccos_error_shrinks_with_iteration_count() {
        let table = CostTable::default();
        let format = fmt(56, 48);
        let mut worst = Vec::new();
        for k in [6, 12, 18, 24, 30] {
            let mut rng = crate::rng::RandomSource::new(99);
            let mut max_err = 0.0f64;
            for _ in 0..1000 {
                let v = rng.uniform_in(-1.0, 1.0);
                let x = FixedPoint::encode(v, format).unwrap();
                let mut ledger = ResourceLedger::new();
                let got = arccos_qfbe(x, k, &table, &mut ledger).unwrap().decode();
                max_err = max_err.max((got - x.decode().acos()).abs());
            }
            worst.push(max_err);
        }
        let floor = 30.0 * 4.0 * format.resolution();
        for pair in worst.windows(2) {
            assert!(pair[1] <= pair[0] + floor, "{worst:?}");
        }
    }

    #[test]
    fn arccos_charges_documented_composition() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let x = FixedPoint::encode(0.3, fmt(32, 16)).unwrap();
        arccos_qfbe(x, 10, &table, &mut ledger).unwrap();
        assert_eq!(
            ledger.t_depth,
            10.0 * (table.multiplier_tdepth(32)
                + table.adder_tdepth(32)
                + table.comparator_tdepth(32))
        );
    }

    #[test]
    fn arccos_rejects_out_of_domain() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let x = FixedPoint::encode(1.5, fmt(32, 16)).unwrap();
        assert!(matches!(
            arccos_qfbe(x, 10, &table, &mut ledger),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn qbn_identity_and_constant_cases() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(48, 24);
        let y = RealTensor::new(vec![3], vec![-0.5, 0.25, 1.0])
            .unwrap()
            .encode(format)
            .unwrap();
        // mu=0, sigma2=1, gamma=1, beta=0, tiny eps: identity map
        let out = qbn(&y, 0.0, 1.0, 1.0, 0.0, 1e-9, &table, &mut ledger).unwrap();
        for (got, want) in out.decode().data().iter().zip(y.decode().data()) {
            assert!((got - want).abs() < 1e-5);
        }

        // constant input equal to mu: all outputs beta
        let c = RealTensor::new(vec![4], vec![2.0; 4])
            .unwrap()
            .encode(format)
            .unwrap();
        let out = qbn(&c, 2.0, 0.5, 3.0, -1.25, 1e-9, &table, &mut ledger).unwrap();
        for got in out.decode().data() {
            assert!((got + 1.25).abs() < 1e-6);
        }
    }

    #[test]
    fn qbn_matches_real_arithmetic_formula() {
        let table = CostTable::default();
        let mut ledger = ResourceLedger::new();
        let format = fmt(32, 16);
        let y = RealTensor::new(vec![3], vec![1.0, 2.0, 3.0])
            .unwrap()
            .encode(format)
            .unwrap();
        let (mu, sigma2, gamma, beta, eps) = (2.0, 2.0 / 3.0, 2.0, 1.0, 1e-5);
        let out = qbn(&y, mu, sigma2, gamma, beta, eps, &table, &mut ledger).unwrap();
        let want = [-1.449, 1.0, 3.449];
        for (got, w) in out.decode().data().iter().zip(want) {
            assert!((got - w).abs() < 1e-2, "{got} vs {w}");
        }
    }
}
