//! Discrete Chebyshev basis and transforms.
//!
//! The basis row `j` is the degree-`j` Chebyshev polynomial of the first kind
//! sampled at the Chebyshev-Gauss nodes `x_i = cos(pi (i + 1/2) / d)` and
//! normalized to unit length. At these nodes the sampled polynomials are
//! exactly orthogonal (`T_j(x_i) = cos(j pi (i + 1/2) / d)`), so the rows
//! form an orthonormal basis without any Gram-Schmidt pass, and row 0 is the
//! constant-sign uniform mode.

use crate::error::{Error, Result};
use crate::scalar::{dot, l2_norm, Real};
use std::io::Write;

#[derive(Debug, Clone)]
pub struct ChebyshevBasis<R: Real> {
    dim: usize,
    /// Row-major `dim x dim`; row j holds the j-th basis vector.
    rows: Vec<R>,
}

impl<R: Real> ChebyshevBasis<R> {
    /// Builds the orthonormal discrete Chebyshev basis of dimension `d`.
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(
                "basis dimension must be at least 1".into(),
            ));
        }
        let mut rows = Vec::with_capacity(d * d);
        // Nodes are implicit: entry (j, i) = norm_j * cos(j * pi * (i+1/2) / d).
        // Evaluation goes through f64 regardless of R so an f32 basis carries
        // f64-accurate samples.
        let norm0 = 1.0 / (d as f64).sqrt();
        let normj = (2.0 / d as f64).sqrt();
        for j in 0..d {
            let norm = if j == 0 { norm0 } else { normj };
            for i in 0..d {
                let theta = std::f64::consts::PI * (j as f64) * (i as f64 + 0.5) / d as f64;
                rows.push(R::from_f64_c(norm * theta.cos()));
            }
        }
        Ok(Self { dim: d, rows })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, j: usize) -> &[R] {
        &self.rows[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[R]> {
        self.rows.chunks(self.dim)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_deviation(&self) -> R {
        let mut worst = R::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                let g = dot(self.row(i), self.row(j));
                let target = if i == j { R::one() } else { R::zero() };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Writes the basis as CSV, one row per basis vector, for external
    /// cross-checks.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for row in self.rows() {
            let line = row
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    fn unit_norm_tolerance(&self) -> R {
        let float_floor = R::epsilon() * R::from_f64_c(16.0 * (self.dim as f64).sqrt());
        R::from_f64_c(1e-9).max(float_floor)
    }

    fn check_unit(&self, psi: &[R]) -> Result<()> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi.len(),
            });
        }
        let norm = l2_norm(psi);
        if (norm - R::one()).abs() > self.unit_norm_tolerance() {
            return Err(Error::DegenerateState(format!(
                "expected a unit vector, got norm {norm}"
            )));
        }
        Ok(())
    }

    /// Exact (noise-free) projections `c_j = <row_j, psi>` for `j < r`.
    pub fn forward(&self, psi: &[R], r: usize) -> Result<CoeffVector<R>> {
        self.check_unit(psi)?;
        if r > self.dim {
            return Err(Error::RankTooLarge {
                rank: r,
                dim: self.dim,
            });
        }
        let coeffs = (0..r).map(|j| dot(self.row(j), psi)).collect();
        CoeffVector::new(coeffs, 0.0, self.dim)
    }

    /// Rank-`r` synthesis `result_i = sum_{j<r} c_j row_j[i]`, optionally
    /// rescaled to unit norm.
    pub fn reconstruct(&self, c: &CoeffVector<R>, renormalize: bool) -> Result<Vec<R>> {
        if c.source_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: c.source_dim(),
            });
        }
        let mut out = vec![R::zero(); self.dim];
        for (j, &cj) in c.coeffs().iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(j)) {
                *o = *o + cj * b;
            }
        }
        if renormalize {
            let norm = l2_norm(&out);
            if norm < R::from_f64_c(1e-12) {
                return Err(Error::DegenerateState(
                    "reconstruction collapsed to zero; cannot renormalize".into(),
                ));
            }
            for o in out.iter_mut() {
                *o = *o / norm;
            }
        }
        Ok(out)
    }

    /// l2 norm of the discarded spectrum, `sqrt(sum_{j>=r} c_j^2)`; equals the
    /// distance between `psi` and its rank-`r` projection.
    pub fn truncation_tail(&self, psi: &[R], r: usize) -> Result<R> {
        let full = self.forward(psi, self.dim)?;
        if r > self.dim {
            return Err(Error::RankTooLarge {
                rank: r,
                dim: self.dim,
            });
        }
        let tail = full.coeffs()[r..]
            .iter()
            .fold(R::zero(), |acc, &c| acc + c * c);
        Ok(tail.sqrt())
    }
}

/// Truncated coefficient vector extracted from a state.
#[derive(Debug, Clone)]
pub struct CoeffVector<R: Real> {
    coeffs: Vec<R>,
    /// Per-coefficient estimation precision; 0 for exact projections.
    delta: f64,
    source_dim: usize,
}

impl<R: Real> CoeffVector<R> {
    pub fn new(coeffs: Vec<R>, delta: f64, source_dim: usize) -> Result<Self> {
        if coeffs.len() > source_dim {
            return Err(Error::RankTooLarge {
                rank: coeffs.len(),
                dim: source_dim,
            });
        }
        let v = Self {
            coeffs,
            delta,
            source_dim,
        };
        // Parseval with estimation slack: sum c_j^2 <= 1 + 2 r delta.
        let sq = v.sum_squares().to_f64();
        let slack = 1.0 + 2.0 * v.rank() as f64 * v.delta + 1e-9;
        if sq > slack {
            return Err(Error::DegenerateState(format!(
                "coefficient energy {sq} exceeds Parseval budget {slack}"
            )));
        }
        Ok(v)
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn sum_squares(&self) -> R {
        self.coeffs.iter().fold(R::zero(), |acc, &c| acc + c * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn random_unit(d: usize, rng: &mut RandomSource) -> Vec<f64> {
        let mut v: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let n = l2_norm(&v);
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    #[test]
    fn dimension_one_is_the_point_basis() {
        let b = ChebyshevBasis::<f64>::new(1).unwrap();
        assert_eq!(b.row(0), &[1.0]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(ChebyshevBasis::<f64>::new(0).is_err());
    }

    #[test]
    fn dimension_two_rows() {
        let b = ChebyshevBasis::<f64>::new(2).unwrap();
        let s = 0.5f64.sqrt();
        for (got, want) in b.row(0).iter().zip([s, s]) {
            assert!((got - want).abs() < 1e-15);
        }
        for (got, want) in b.row(1).iter().zip([s, -s]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn gram_matrix_is_identity_at_d8() {
        let b = ChebyshevBasis::<f64>::new(8).unwrap();
        // brute-force Gram matrix of the 8 rows
        for i in 0..8 {
            for j in 0..8 {
                let g = dot(b.row(i), b.row(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() <= 1e-12, "({i},{j}) -> {g}");
            }
        }
    }

    #[test]
    fn row_zero_has_constant_sign() {
        for d in [1, 3, 17, 64] {
            let b = ChebyshevBasis::<f64>::new(d).unwrap();
            assert!(b.row(0).iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn forward_of_basis_vector_is_unit_coefficient() {
        let b = ChebyshevBasis::<f64>::new(4).unwrap();
        let psi = b.row(0).to_vec();
        let c = b.forward(&psi, 4).unwrap();
        assert!((c.coeffs()[0] - 1.0).abs() < 1e-12);
        for &cj in &c.coeffs()[1..] {
            assert!(cj.abs() < 1e-12);
        }
    }

    #[test]
    fn forward_of_superposition() {
        let b = ChebyshevBasis::<f64>::new(4).unwrap();
        let s = 0.5f64.sqrt();
        let psi: Vec<f64> = b
            .row(0)
            .iter()
            .zip(b.row(1))
            .map(|(a, c)| s * (a + c))
            .collect();
        let c = b.forward(&psi, 2).unwrap();
        assert!((c.coeffs()[0] - s).abs() < 1e-12);
        assert!((c.coeffs()[1] - s).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_dense_matvec_oracle() {
        let b = ChebyshevBasis::<f64>::new(8).unwrap();
        let mut rng = RandomSource::new(11);
        let psi = random_unit(8, &mut rng);
        let c = b.forward(&psi, 8).unwrap();
        for j in 0..8 {
            // independent nested-loop projection
            let mut acc = 0.0;
            for i in 0..8 {
                acc += b.row(j)[i] * psi[i];
            }
            assert!((c.coeffs()[j] - acc).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_too_large_rejected() {
        let b = ChebyshevBasis::<f64>::new(4).unwrap();
        let psi = b.row(0).to_vec();
        assert!(matches!(
            b.forward(&psi, 5),
            Err(Error::RankTooLarge { .. })
        ));
    }

    #[test]
    fn reconstruct_single_mode_recovers_row() {
        let b = ChebyshevBasis::<f64>::new(6).unwrap();
        let mut coeffs = vec![0.0; 6];
        coeffs[0] = 1.0;
        let c = CoeffVector::new(coeffs, 0.0, 6).unwrap();
        let v = b.reconstruct(&c, false).unwrap();
        for (got, want) in v.iter().zip(b.row(0)) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn full_rank_roundtrip_is_identity() {
        let b = ChebyshevBasis::<f64>::new(32).unwrap();
        let mut rng = RandomSource::new(3);
        let psi = random_unit(32, &mut rng);
        let c = b.forward(&psi, 32).unwrap();
        let back = b.reconstruct(&c, false).unwrap();
        for (got, want) in back.iter().zip(&psi) {
            assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn half_rank_residual_equals_tail() {
        let b = ChebyshevBasis::<f64>::new(16).unwrap();
        let mut rng = RandomSource::new(5);
        let psi = random_unit(16, &mut rng);
        let c = b.forward(&psi, 8).unwrap();
        let recon = b.reconstruct(&c, false).unwrap();
        let residual: f64 = psi
            .iter()
            .zip(&recon)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let tail = b.truncation_tail(&psi, 8).unwrap();
        assert!((residual - tail).abs() < 1e-12);
    }

    #[test]
    fn tail_trivial_cases() {
        let d = 8;
        let b = ChebyshevBasis::<f64>::new(d).unwrap();
        let mut rng = RandomSource::new(9);
        let psi = random_unit(d, &mut rng);
        assert!(b.truncation_tail(&psi, d).unwrap() < 1e-12);
        let last = b.row(d - 1).to_vec();
        let t = b.truncation_tail(&last, d - 1).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_tail_matches_direct_summation() {
        // plant c_j = (j+1)^-2 normalized, d = 64, r = 8
        let d = 64;
        let b = ChebyshevBasis::<f64>::new(d).unwrap();
        let mut c: Vec<f64> = (0..d).map(|j| ((j + 1) as f64).powi(-2)).collect();
        let norm = l2_norm(&c);
        c.iter_mut().for_each(|x| *x /= norm);
        let tail_direct: f64 = c[8..].iter().map(|x| x * x).sum::<f64>().sqrt();
        let cv = CoeffVector::new(c, 0.0, d).unwrap();
        let psi = b.reconstruct(&cv, false).unwrap();
        let tail = b.truncation_tail(&psi, 8).unwrap();
        assert!((tail - tail_direct).abs() < 1e-10);
    }

    #[test]
    fn parseval_for_random_states() {
        let d = 64;
        let b = ChebyshevBasis::<f64>::new(d).unwrap();
        let mut rng = RandomSource::new(17);
        for _ in 0..20 {
            let psi = random_unit(d, &mut rng);
            let c = b.forward(&psi, d).unwrap();
            assert!((c.sum_squares() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn projection_is_l2_optimal_among_rank_r_expansions() {
        let d = 16;
        let r = 5;
        let b = ChebyshevBasis::<f64>::new(d).unwrap();
        let mut rng = RandomSource::new(23);
        let psi = random_unit(d, &mut rng);
        let c = b.forward(&psi, r).unwrap();
        let best = b.reconstruct(&c, false).unwrap();
        let best_err: f64 = psi
            .iter()
            .zip(&best)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        for _ in 0..50 {
            let perturbed: Vec<f64> = c
                .coeffs()
                .iter()
                .map(|&cj| cj + 0.2 * rng.normal())
                .collect();
            let cv = CoeffVector::new(perturbed, 1.0, d).unwrap();
            let v = b.reconstruct(&cv, false).unwrap();
            let err: f64 = psi.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(err + 1e-12 >= best_err);
        }
    }

    #[test]
    fn orthonormality_across_dimensions() {
        for d in [1usize, 2, 5, 33, 128] {
            let b = ChebyshevBasis::<f64>::new(d).unwrap();
            assert!(b.gram_deviation() <= 1e-10, "d={d}");
        }
    }

    #[test]
    fn f32_basis_is_usable() {
        let b = ChebyshevBasis::<f32>::new(16).unwrap();
        assert!(b.gram_deviation() <= 1e-5);
        let psi = b.row(2).to_vec();
        let c = b.forward(&psi, 16).unwrap();
        assert!((c.coeffs()[2] - 1.0).abs() < 1e-5);
        let back = b.reconstruct(&c, true).unwrap();
        for (got, want) in back.iter().zip(&psi) {
            assert!((got - want).abs() < 1e-4);
        }
    }

    #[test]
    fn degenerate_renormalization_rejected() {
        let b = ChebyshevBasis::<f64>::new(4).unwrap();
        let c = CoeffVector::new(vec![0.0; 4], 0.0, 4).unwrap();
        assert!(matches!(
            b.reconstruct(&c, true),
            Err(Error::DegenerateState(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn random_states_roundtrip_and_obey_parseval(
            d in 1usize..48,
            seed in 0u64..1000,
        ) {
            let b = ChebyshevBasis::<f64>::new(d).unwrap();
            let mut rng = RandomSource::new(seed);
            let psi = random_unit(d, &mut rng);
            let c = b.forward(&psi, d).unwrap();
            proptest::prop_assert!((c.sum_squares() - 1.0).abs() <= 1e-9);
            let back = b.reconstruct(&c, false).unwrap();
            for (got, want) in back.iter().zip(&psi) {
                proptest::prop_assert!((got - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csv_export_roundtrips_row_count() {
        let b = ChebyshevBasis::<f64>::new(5).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        let first: Vec<f64> = lines[0]
            .split(',')
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(first.len(), 5);
        assert!((first[0] - b.row(0)[0]).abs() < 1e-15);
    }
}
