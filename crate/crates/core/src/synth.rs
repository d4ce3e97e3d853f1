//! Synthetic instance generators: compressible states with controlled
//! Chebyshev spectra and a planted two-class task for accuracy-versus-rank
//! studies.
//!
//! The power-law family `c_j ~ (j+1)^-p` is the canonical compressibility
//! knob: larger `p` concentrates the spectrum in fewer modes and widens the
//! coefficient-transfer advantage. The toy task plants its class signal in
//! the two lowest modes so the accuracy-versus-rank curve has a reproducible
//! elbow, and the classifier is a closed-form ridge probe so no optimizer
//! nondeterminism enters acceptance checks.

use crate::chebyshev::CoeffVector;
use crate::dtm::DataTransfer;
use crate::error::{Error, Result};
use crate::qlam::{prepare_state, AmplitudeState, NoiseMode, NoiseModel, PrepCostModel};
use crate::resource::ResourceLedger;
use crate::rng::RandomSource;
use crate::scalar::l2_norm;
use crate::Basis;

/// Power-law spectrum specification.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSpec {
    pub dim: usize,
    /// Decay exponent; must exceed 1/2 so the tail is square-summable.
    pub decay: f64,
    pub seed: u64,
}

impl SpectrumSpec {
    /// Unnormalized planted coefficient magnitudes `(j+1)^-p`.
    fn magnitudes(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| ((j + 1) as f64).powf(-self.decay))
            .collect()
    }

    /// Closed-form truncation tail of the planted spectrum at rank `r`.
    pub fn planted_tail(&self, r: usize) -> f64 {
        let m = self.magnitudes();
        let total: f64 = m.iter().map(|c| c * c).sum();
        let tail: f64 = m[r.min(self.dim)..].iter().map(|c| c * c).sum();
        (tail / total).sqrt()
    }
}

/// Builds the state `sum_j s_j (j+1)^-p |T_j>` with seeded signs `s_j`,
/// normalized.
pub fn make_compressible_state(spec: &SpectrumSpec, basis: &Basis) -> Result<AmplitudeState> {
    if spec.decay <= 0.5 {
        return Err(Error::DomainError(format!(
            "decay exponent must exceed 1/2, got {}",
            spec.decay
        )));
    }
    if spec.dim != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: spec.dim,
        });
    }
    let mut rng = RandomSource::new(spec.seed);
    let mut coeffs = spec.magnitudes();
    for c in coeffs.iter_mut() {
        *c *= rng.sign();
    }
    let norm = l2_norm(&coeffs);
    coeffs.iter_mut().for_each(|c| *c /= norm);
    let cv = CoeffVector::new(coeffs, 0.0, spec.dim)?;
    let amplitudes = basis.reconstruct(&cv, false)?;
    prepare_state(&amplitudes, PrepCostModel::Dense)
}

/// Two-class toy task specification.
#[derive(Debug, Clone, Copy)]
pub struct ToyTaskSpec {
    /// Total sample count (split evenly between classes, then half/half into
    /// train and test).
    pub n_samples: usize,
    pub dim: usize,
    pub seed: u64,
    /// Class-separation knob; 0 makes the classes indistinguishable.
    pub separation: f64,
}

/// Labeled synthetic states, coefficients planted in Chebyshev space.
#[derive(Debug, Clone)]
pub struct ToyTask {
    pub states: Vec<AmplitudeState>,
    /// +1 / -1 labels.
    pub labels: Vec<f64>,
    /// First `train_len` samples are the training split.
    pub train_len: usize,
}

/// Per-coordinate noise scale of the planted coefficient blobs.
const BLOB_STD: f64 = 0.25;
/// Mean offsets of the two informative modes at separation 1: mode 0 carries
/// a weak signal, mode 1 a strong one, so rank 1 transfers only part of the
/// class structure and rank 2 nearly all of it.
const MODE0_OFFSET: f64 = 0.075;
const MODE1_OFFSET: f64 = 0.375;
/// Constant component of mode 0 (uniform-like features dominate).
const MODE0_BIAS: f64 = 1.2;

/// Number of informative modes the task plants.
pub const PLANTED_INFORMATIVE_MODES: usize = 2;

/// Generates the planted task: two seeded Gaussian blobs in coefficient
/// space whose means differ only in modes 0 and 1, embedded as states.
pub fn make_toy_task(spec: &ToyTaskSpec, basis: &Basis) -> Result<ToyTask> {
    if spec.dim < 8 {
        return Err(Error::InvalidDimension(
            "toy task needs dimension at least 8".into(),
        ));
    }
    if spec.dim != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: spec.dim,
        });
    }
    let mut rng = RandomSource::new(spec.seed);
    let mut states = Vec::with_capacity(spec.n_samples);
    let mut labels = Vec::with_capacity(spec.n_samples);
    for i in 0..spec.n_samples {
        let class = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut coeffs = vec![0.0; spec.dim];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let mean = match j {
                0 => MODE0_BIAS + class * spec.separation * MODE0_OFFSET,
                1 => class * spec.separation * MODE1_OFFSET,
                _ => 0.0,
            };
            // uninformative modes decay so the states stay compressible
            let scale = if j < PLANTED_INFORMATIVE_MODES {
                BLOB_STD
            } else {
                BLOB_STD / (j as f64)
            };
            *c = mean + scale * rng.normal();
        }
        let norm = l2_norm(&coeffs);
        coeffs.iter_mut().for_each(|c| *c /= norm);
        let cv = CoeffVector::new(coeffs, 0.0, spec.dim)?;
        let amplitudes = basis.reconstruct(&cv, false)?;
        states.push(prepare_state(&amplitudes, PrepCostModel::Dense)?);
        labels.push(class);
    }
    Ok(ToyTask {
        states,
        labels,
        train_len: spec.n_samples / 2,
    })
}

impl ToyTask {
    /// Test accuracy of the ridge probe on features produced by an arbitrary
    /// per-state extractor (sample index, state) -> feature vector.
    pub fn accuracy_via<F>(&self, mut extract: F) -> Result<f64>
    where
        F: FnMut(usize, &AmplitudeState) -> Result<Vec<f64>>,
    {
        let mut features = Vec::with_capacity(self.states.len());
        for (i, state) in self.states.iter().enumerate() {
            features.push(extract(i, state)?);
        }
        Ok(self.probe_accuracy(&features))
    }

    /// Test accuracy of the ridge probe on coefficient features transferred
    /// at the given rank and precision. Per-sample noise streams derive from
    /// `noise_seed`, so results reproduce bit-exactly.
    pub fn accuracy_at_rank(
        &self,
        dt: &DataTransfer,
        rank: usize,
        delta: f64,
        mode: NoiseMode,
        noise_seed: u64,
        ledger: &mut ResourceLedger,
    ) -> Result<f64> {
        let root = RandomSource::new(noise_seed);
        self.accuracy_via(|i, state| {
            let mut noise = NoiseModel::from_source(mode, root.child(i as u64));
            let coeffs = dt.dcd_q2c(state, rank, delta, &mut noise, ledger)?;
            Ok(coeffs.coeffs().to_vec())
        })
    }

    /// Probe accuracy on the raw amplitude vectors (lossless-transfer
    /// baseline).
    pub fn accuracy_raw(&self) -> f64 {
        let features: Vec<Vec<f64>> = self
            .states
            .iter()
            .map(|s| s.amplitudes().to_vec())
            .collect();
        self.probe_accuracy(&features)
    }

    fn probe_accuracy(&self, features: &[Vec<f64>]) -> f64 {
        let (train_x, test_x) = features.split_at(self.train_len);
        let (train_y, test_y) = self.labels.split_at(self.train_len);
        let weights = ridge_fit(train_x, train_y, 1e-6 * self.train_len as f64);
        let mut correct = 0usize;
        for (x, &y) in test_x.iter().zip(test_y) {
            let score = weights[0]
                + x.iter()
                    .zip(&weights[1..])
                    .map(|(xi, wi)| xi * wi)
                    .sum::<f64>();
            if score.signum() == y {
                correct += 1;
            }
        }
        correct as f64 / test_y.len() as f64
    }

    /// Writes `label, amplitudes...` rows for external replication.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for (state, label) in self.states.iter().zip(&self.labels) {
            let amps = state
                .amplitudes()
                .iter()
                .map(|a| format!("{a}"))
                .collect::<Vec<_>>()
                .join(",");
            writeln!(out, "{label},{amps}")?;
        }
        Ok(())
    }
}

/// Closed-form ridge regression with a bias column; returns
/// `[bias, w_0, ..., w_{m-1}]`.
fn ridge_fit(xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> Vec<f64> {
    let n = xs.len();
    let m = xs[0].len() + 1; // bias column
    let feat = |row: &Vec<f64>, j: usize| if j == 0 { 1.0 } else { row[j - 1] };
    // normal equations: (X^T X + lambda I) w = X^T y
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for (row, &y) in xs.iter().zip(ys) {
        for i in 0..m {
            let fi = feat(row, i);
            b[i] += fi * y;
            for j in i..m {
                a[i * m + j] += fi * feat(row, j);
            }
        }
    }
    for i in 0..m {
        a[i * m + i] += lambda;
        for j in 0..i {
            a[i * m + j] = a[j * m + i];
        }
    }
    let _ = n;
    cholesky_solve(&mut a, &mut b, m);
    b
}

/// In-place Cholesky solve of the SPD system `a x = b`; the ridge term keeps
/// the factorization well defined.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], m: usize) {
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for k in 0..j {
                s -= a[i * m + k] * a[j * m + k];
            }
            if i == j {
                a[i * m + j] = s.max(1e-300).sqrt();
            } else {
                a[i * m + j] = s / a[j * m + j];
            }
        }
    }
    // forward substitution L z = b
    for i in 0..m {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * m + k] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
    // back substitution L^T x = z
    for i in (0..m).rev() {
        let mut s = b[i];
        for k in i + 1..m {
            s -= a[k * m + i] * b[k];
        }
        b[i] = s / a[i * m + i];
    }
}

/// Rank at which the accuracy curve jumps the most (the elbow).
pub fn elbow_rank(curve: &[(usize, f64)]) -> usize {
    let mut best = (0usize, f64::MIN);
    for pair in curve.windows(2) {
        let jump = pair[1].1 - pair[0].1;
        if jump > best.1 {
            best = (pair[1].0, jump);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_decay_concentrates_in_mode_zero() {
        let basis = Basis::new(16).unwrap();
        let spec = SpectrumSpec {
            dim: 16,
            decay: 30.0,
            seed: 1,
        };
        let state = make_compressible_state(&spec, &basis).unwrap();
        let overlap: f64 = state
            .amplitudes()
            .iter()
            .zip(basis.row(0))
            .map(|(a, b)| a * b)
            .sum();
        assert!(overlap.abs() > 1.0 - 1e-9);
    }

    #[test]
    fn planted_tail_matches_transform() {
        let basis = Basis::new(64).unwrap();
        let spec = SpectrumSpec {
            dim: 64,
            decay: 2.0,
            seed: 7,
        };
        let state = make_compressible_state(&spec, &basis).unwrap();
        let tail = basis.truncation_tail(state.amplitudes(), 8).unwrap();
        assert!((tail - spec.planted_tail(8)).abs() < 1e-10);
    }

    #[test]
    fn same_seed_same_state() {
        let basis = Basis::new(32).unwrap();
        let spec = SpectrumSpec {
            dim: 32,
            decay: 1.5,
            seed: 99,
        };
        let a = make_compressible_state(&spec, &basis).unwrap();
        let b = make_compressible_state(&spec, &basis).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
    }

    #[test]
    fn shallow_decay_rejected() {
        let basis = Basis::new(16).unwrap();
        let spec = SpectrumSpec {
            dim: 16,
            decay: 0.5,
            seed: 0,
        };
        assert!(make_compressible_state(&spec, &basis).is_err());
    }

    #[test]
    fn zero_separation_is_chance_level() {
        let basis = Basis::new(16).unwrap();
        let mut accs = Vec::new();
        for seed in 0..5 {
            let task = make_toy_task(
                &ToyTaskSpec {
                    n_samples: 400,
                    dim: 16,
                    seed,
                    separation: 0.0,
                },
                &basis,
            )
            .unwrap();
            accs.push(task.accuracy_raw());
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((mean - 0.5).abs() < 0.05, "mean accuracy {mean}");
    }

    #[test]
    fn full_rank_transfer_equals_raw_accuracy() {
        let basis = Basis::new(16).unwrap();
        let dt = DataTransfer::from_basis(basis.clone());
        let task = make_toy_task(
            &ToyTaskSpec {
                n_samples: 200,
                dim: 16,
                seed: 3,
                separation: 1.0,
            },
            &basis,
        )
        .unwrap();
        let mut ledger = ResourceLedger::new();
        let full = task
            .accuracy_at_rank(&dt, 16, 0.01, NoiseMode::Exact, 0, &mut ledger)
            .unwrap();
        let raw = task.accuracy_raw();
        // full-rank coefficients are an orthogonal transform of the raw
        // amplitudes; the isotropic ridge probe is invariant under it
        assert_eq!(full, raw);
    }

    #[test]
    fn accuracy_curve_has_elbow_at_two_modes() {
        let basis = Basis::new(16).unwrap();
        let dt = DataTransfer::from_basis(basis.clone());
        let ranks = [1usize, 2, 3, 4, 8, 16];
        let mut mean = vec![0.0; ranks.len()];
        let seeds = 5u64;
        for seed in 0..seeds {
            let task = make_toy_task(
                &ToyTaskSpec {
                    n_samples: 400,
                    dim: 16,
                    seed: 40 + seed,
                    separation: 1.0,
                },
                &basis,
            )
            .unwrap();
            let mut ledger = ResourceLedger::new();
            for (i, &r) in ranks.iter().enumerate() {
                mean[i] += task
                    .accuracy_at_rank(&dt, r, 0.01, NoiseMode::Exact, seed, &mut ledger)
                    .unwrap()
                    / seeds as f64;
            }
        }
        let curve: Vec<(usize, f64)> = ranks.iter().copied().zip(mean.iter().copied()).collect();
        // elbow at the planted informative-mode count, within one rank step
        let elbow = elbow_rank(&curve);
        assert!(
            (elbow as isize - PLANTED_INFORMATIVE_MODES as isize).abs() <= 1,
            "elbow at {elbow}, curve {curve:?}"
        );
        // rank 2 reaches the plateau; rank 1 clearly does not
        let full = mean[ranks.len() - 1];
        assert!((mean[1] - full).abs() <= 0.02, "curve {curve:?}");
        assert!(mean[0] <= full - 0.10, "curve {curve:?}");
    }

    #[test]
    fn accuracy_nondecreasing_up_to_plateau() {
        let basis = Basis::new(16).unwrap();
        let dt = DataTransfer::from_basis(basis.clone());
        let ranks = [1usize, 2, 4, 8];
        let seeds = 8u64;
        let mut mean = vec![0.0; ranks.len()];
        for seed in 0..seeds {
            let task = make_toy_task(
                &ToyTaskSpec {
                    n_samples: 400,
                    dim: 16,
                    seed: 70 + seed,
                    separation: 1.0,
                },
                &basis,
            )
            .unwrap();
            let mut ledger = ResourceLedger::new();
            for (i, &r) in ranks.iter().enumerate() {
                mean[i] += task
                    .accuracy_at_rank(&dt, r, 0.01, NoiseMode::Exact, seed, &mut ledger)
                    .unwrap()
                    / seeds as f64;
            }
        }
        for pair in mean.windows(2) {
            assert!(pair[1] >= pair[0] - 0.02, "curve {mean:?}");
        }
    }

    #[test]
    fn task_csv_has_one_row_per_sample() {
        let basis = Basis::new(8).unwrap();
        let task = make_toy_task(
            &ToyTaskSpec {
                n_samples: 10,
                dim: 8,
                seed: 5,
                separation: 1.0,
            },
            &basis,
        )
        .unwrap();
        let mut buf = Vec::new();
        task.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert_eq!(text.lines().next().unwrap().split(',').count(), 9);
    }
}
