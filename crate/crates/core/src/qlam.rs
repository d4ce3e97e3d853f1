//! Quantum linear algebra module emulation: amplitude states, block-encoding
//! application, amplitude-estimation readout, and inner-product estimation
//! under selectable noise semantics.
//!
//! Estimators model quantum amplitude estimation at additive precision
//! `delta` with `ceil(pi / delta)` oracle queries per call (the standard
//! phase-grid constant; tunable in principle but fixed here so cost laws are
//! reproducible). Noise enters through [`NoiseModel`]: `exact` returns true
//! values, `bounded` draws an error of magnitude at most `delta`, and
//! `stochastic` draws a centered truncated Gaussian with standard deviation
//! `delta / 2`.

use crate::error::{Error, Result};
use crate::resource::ResourceLedger;
use crate::rng::RandomSource;
use crate::scalar::{dot, l2_norm};
use serde::{Deserialize, Serialize};

/// Unit-norm real amplitude vector with its state-preparation cost in
/// T-depth units.
#[derive(Debug, Clone)]
pub struct AmplitudeState {
    amplitudes: Vec<f64>,
    prep_cost: f64,
}

impl AmplitudeState {
    pub fn new(amplitudes: Vec<f64>, prep_cost: f64) -> Result<Self> {
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateState(format!(
                "amplitude vector has norm {norm}, expected 1"
            )));
        }
        if !prep_cost.is_finite() || prep_cost <= 0.0 {
            return Err(Error::DegenerateState(format!(
                "state preparation cost must be positive, got {prep_cost}"
            )));
        }
        Ok(Self {
            amplitudes,
            prep_cost,
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn prep_cost(&self) -> f64 {
        self.prep_cost
    }
}

/// State-preparation cost models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrepCostModel {
    /// Dense amplitude loading: `2 d` T-depth.
    Dense,
    /// Re-preparation from `rank` stored coefficients through arithmetic on
    /// the index register: `rank * (log2 d)^2` T-depth.
    Reprep { rank: usize },
    /// Caller-supplied constant (e.g. data served by an external memory).
    Fixed(f64),
}

impl PrepCostModel {
    pub fn cost(&self, dim: usize) -> f64 {
        match *self {
            PrepCostModel::Dense => 2.0 * dim as f64,
            PrepCostModel::Reprep { rank } => {
                let log = (dim as f64).log2();
                (rank as f64) * log * log
            }
            PrepCostModel::Fixed(c) => c,
        }
    }
}

/// Normalizes a nonzero vector into a state, with the preparation cost given
/// by `model`.
pub fn prepare_state(v: &[f64], model: PrepCostModel) -> Result<AmplitudeState> {
    let norm = l2_norm(v);
    if norm < 1e-300 {
        return Err(Error::ZeroVector(
            "cannot prepare a state from the zero vector".into(),
        ));
    }
    let amplitudes = v.iter().map(|x| x / norm).collect();
    AmplitudeState::new(amplitudes, model.cost(v.len()).max(1.0))
}

/// Noise semantics for estimator outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Zero estimation error; costs still accrue.
    Exact,
    /// Worst-case-bounded error: magnitude never exceeds the precision.
    Bounded,
    /// Centered truncated Gaussian, std `delta/2`, truncated at `±2 delta`.
    Stochastic,
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(NoiseMode::Exact),
            "bounded" => Ok(NoiseMode::Bounded),
            "stochastic" => Ok(NoiseMode::Stochastic),
            other => Err(Error::Config(format!(
                "unknown noise mode '{other}'; expected exact, bounded, or stochastic"
            ))),
        }
    }
}

impl std::fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NoiseMode::Exact => "exact",
            NoiseMode::Bounded => "bounded",
            NoiseMode::Stochastic => "stochastic",
        };
        f.write_str(s)
    }
}

/// Deterministic estimator-noise source: outputs are pure functions of
/// (mode, seed, call index).
#[derive(Debug, Clone)]
pub struct NoiseModel {
    mode: NoiseMode,
    rng: RandomSource,
}

impl NoiseModel {
    pub fn new(mode: NoiseMode, seed: u64) -> Self {
        Self {
            mode,
            rng: RandomSource::new(seed),
        }
    }

    pub fn from_source(mode: NoiseMode, rng: RandomSource) -> Self {
        Self { mode, rng }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    pub fn rng(&mut self) -> &mut RandomSource {
        &mut self.rng
    }

    /// One estimation-error draw at precision `delta`.
    pub fn draw_error(&mut self, delta: f64) -> f64 {
        match self.mode {
            NoiseMode::Exact => 0.0,
            NoiseMode::Bounded => self.rng.uniform_in(-delta, delta),
            NoiseMode::Stochastic => loop {
                let e = 0.5 * delta * self.rng.normal();
                if e.abs() <= 2.0 * delta {
                    break e;
                }
            },
        }
    }
}

/// `(alpha, a, delta)`-block-encoding of a real matrix: the unitary holds
/// `A / alpha` in its upper-left block using `a` ancillas, up to error
/// `delta_be`.
#[derive(Debug, Clone)]
pub struct BlockEncoding {
    matrix: Vec<f64>,
    rows: usize,
    cols: usize,
    alpha: f64,
    ancillas: u32,
    delta_be: f64,
}

impl BlockEncoding {
    pub fn new(
        matrix: Vec<f64>,
        rows: usize,
        cols: usize,
        alpha: f64,
        ancillas: u32,
        delta_be: f64,
    ) -> Result<Self> {
        if matrix.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::ShapeMismatch(format!(
                "matrix storage {} does not match {rows}x{cols}",
                matrix.len()
            )));
        }
        if delta_be < 0.0 {
            return Err(Error::InvalidPrecision(delta_be));
        }
        let be = Self {
            matrix,
            rows,
            cols,
            alpha,
            ancillas,
            delta_be,
        };
        // alpha must dominate the spectral norm; power iteration gives a
        // lower bound to check against.
        let lower = be.spectral_norm_estimate(60);
        if alpha < lower * (1.0 - 1e-9) {
            return Err(Error::DomainError(format!(
                "alpha {alpha} is below the spectral norm (>= {lower})"
            )));
        }
        Ok(be)
    }

    /// Builds a block encoding with `alpha = sqrt('1-norm' * 'inf-norm')`,
    /// which always dominates the spectral norm.
    pub fn with_auto_alpha(matrix: Vec<f64>, rows: usize, cols: usize, delta_be: f64) -> Result<Self> {
        let mut max_row = 0.0f64;
        for r in 0..rows {
            let s: f64 = (0..cols).map(|c| matrix[r * cols + c].abs()).sum();
            max_row = max_row.max(s);
        }
        let mut max_col = 0.0f64;
        for c in 0..cols {
            let s: f64 = (0..rows).map(|r| matrix[r * cols + c].abs()).sum();
            max_col = max_col.max(s);
        }
        let alpha = (max_row * max_col).sqrt().max(1e-300);
        let ancillas = ((rows.max(cols) as f64).log2().ceil() as u32).max(1);
        Self::new(matrix, rows, cols, alpha, ancillas, delta_be)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ancillas(&self) -> u32 {
        self.ancillas
    }

    pub fn delta_be(&self) -> f64 {
        self.delta_be
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(&self.matrix[r * self.cols..(r + 1) * self.cols], v);
        }
        out
    }

    fn spectral_norm_estimate(&self, iters: usize) -> f64 {
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut sigma = 0.0;
        for _ in 0..iters {
            let w = self.matvec(&v);
            // v <- A^T w
            let mut u = vec![0.0; self.cols];
            for (r, &wr) in w.iter().enumerate() {
                for (c, uc) in u.iter_mut().enumerate() {
                    *uc += self.matrix[r * self.cols + c] * wr;
                }
            }
            let n = l2_norm(&u);
            if n < 1e-300 {
                return l2_norm(&w);
            }
            u.iter_mut().for_each(|x| *x /= n);
            sigma = l2_norm(&self.matvec(&u));
            v = u;
        }
        sigma
    }

    /// Declared T-depth of one application of the encoding unitary
    /// (qRAM-backed construction from classical data).
    pub fn application_tdepth(&self) -> f64 {
        let log = (self.rows.max(self.cols) as f64).log2().max(1.0);
        log * log
    }
}

/// Applies a block encoding to a state. Returns the normalized image and the
/// post-selection success probability `||A psi||^2 / alpha^2`.
///
/// In the bounded and stochastic modes an encoding-error perturbation of
/// magnitude at most `delta_be * ||psi||` is injected before normalization.
pub fn apply_block_encoding(
    be: &BlockEncoding,
    psi: &AmplitudeState,
    noise: &mut NoiseModel,
    ledger: &mut ResourceLedger,
) -> Result<(AmplitudeState, f64)> {
    if be.cols != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: be.cols,
            got: psi.dim(),
        });
    }
    let mut w = be.matvec(psi.amplitudes());
    if be.delta_be > 0.0 && noise.mode() != NoiseMode::Exact {
        let dir: Vec<f64> = (0..w.len()).map(|_| noise.rng().normal()).collect();
        let n = l2_norm(&dir);
        if n > 0.0 {
            let mag = be.delta_be * noise.rng().uniform();
            for (wi, di) in w.iter_mut().zip(&dir) {
                *wi += mag * di / n;
            }
        }
    }
    let norm = l2_norm(&w);
    if norm < 1e-12 {
        return Err(Error::DegenerateState(
            "block encoding maps the state to zero".into(),
        ));
    }
    let success = (norm / be.alpha).powi(2).min(1.0);
    ledger.add_t_depth(be.application_tdepth());
    let amplitudes = w.iter().map(|x| x / norm).collect();
    let out = AmplitudeState::new(amplitudes, psi.prep_cost() + be.application_tdepth())?;
    Ok((out, success))
}

/// Oracle queries for one amplitude estimation at precision `delta`.
pub fn qae_query_count(delta: f64) -> f64 {
    (std::f64::consts::PI / delta).ceil()
}

/// Amplitude estimation of a probability `p` to additive precision `delta`;
/// charges `ceil(pi / delta)` oracle queries.
pub fn qae_estimate(
    p: f64,
    delta: f64,
    noise: &mut NoiseModel,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::DomainError(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrecision(delta));
    }
    ledger.add_queries(qae_query_count(delta));
    Ok((p + noise.draw_error(delta)).clamp(0.0, 1.0))
}

/// Signed inner-product estimate within `delta`, modeled as a Hadamard-test
/// estimator: amplitude-estimate `q = (1 + <x,y>)/2` and map back affinely.
/// The affine map doubles deviations, so the injected error is drawn at
/// `delta/2`.
///
/// Charges `ceil(pi/delta) * (C_x + C_y)` oracle queries, the matching
/// sequential estimation circuit as T-depth, and one readout shot.
pub fn inner_product_estimate(
    x: &AmplitudeState,
    y: &AmplitudeState,
    delta: f64,
    noise: &mut NoiseModel,
    ledger: &mut ResourceLedger,
) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidPrecision(delta));
    }
    let s = dot(x.amplitudes(), y.amplitudes());
    let q = 0.5 * (1.0 + s);
    let q_est = (q + noise.draw_error(0.5 * delta)).clamp(0.0, 1.0);
    let est = (2.0 * q_est - 1.0).clamp(-1.0, 1.0);
    let prep = x.prep_cost() + y.prep_cost();
    let queries = qae_query_count(delta);
    ledger.add_queries(queries * prep);
    ledger.add_t_depth(queries * prep);
    ledger.add_shots(1.0);
    Ok(est)
}

/// Samples the state in the computational basis; returns per-index counts.
/// Charges `shots` sampling shots and `C_psi` T-depth per shot.
pub fn sample_measure(
    psi: &AmplitudeState,
    shots: u64,
    rng: &mut RandomSource,
    ledger: &mut ResourceLedger,
) -> Vec<u64> {
    debug_assert!(shots >= 1);
    let mut cdf = Vec::with_capacity(psi.dim());
    let mut acc = 0.0;
    for a in psi.amplitudes() {
        acc += a * a;
        cdf.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; psi.dim()];
    for _ in 0..shots {
        let u = rng.uniform() * total;
        let idx = cdf.partition_point(|&c| c < u).min(psi.dim() - 1);
        counts[idx] += 1;
    }
    ledger.add_shots(shots as f64);
    ledger.add_t_depth(psi.prep_cost() * shots as f64);
    counts
}

/// Concatenates component states into disjoint index blocks with the given
/// weights and renormalizes; the LCU combination charges the summed
/// preparation costs plus one adder depth per component.
pub fn lcu_concat(
    states: &[AmplitudeState],
    weights: &[f64],
    combine_tdepth_per_head: f64,
    ledger: &mut ResourceLedger,
) -> Result<AmplitudeState> {
    if states.is_empty() {
        return Err(Error::ZeroVector("no states to concatenate".into()));
    }
    if states.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: states.len(),
            got: weights.len(),
        });
    }
    if weights.contains(&0.0) {
        return Err(Error::ZeroVector(
            "concatenation weights must be nonzero".into(),
        ));
    }
    let dim = states[0].dim();
    if states.iter().any(|s| s.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: states.iter().map(|s| s.dim()).find(|&d| d != dim).unwrap(),
        });
    }
    let mut stacked = Vec::with_capacity(dim * states.len());
    for (state, &w) in states.iter().zip(weights) {
        stacked.extend(state.amplitudes().iter().map(|a| a * w));
    }
    let norm = l2_norm(&stacked);
    stacked.iter_mut().for_each(|x| *x /= norm);
    let prep: f64 = states.iter().map(|s| s.prep_cost()).sum();
    let cost = prep + states.len() as f64 * combine_tdepth_per_head;
    ledger.add_t_depth(cost);
    AmplitudeState::new(stacked, cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_state(dim: usize, idx: usize) -> AmplitudeState {
        let mut v = vec![0.0; dim];
        v[idx] = 1.0;
        AmplitudeState::new(v, 1.0).unwrap()
    }

    #[test]
    fn prepare_normalizes() {
        let s = prepare_state(&[3.0, 4.0], PrepCostModel::Dense).unwrap();
        assert_eq!(s.amplitudes(), &[0.6, 0.8]);
        assert_eq!(s.prep_cost(), 4.0);

        let e0 = prepare_state(&[2.0, 0.0, 0.0], PrepCostModel::Dense).unwrap();
        assert_eq!(e0.amplitudes(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn prepare_uniform_cost_example() {
        let s = prepare_state(&[1.0; 8], PrepCostModel::Dense).unwrap();
        let want = 1.0 / 8f64.sqrt();
        for a in s.amplitudes() {
            assert!((a - want).abs() < 1e-15);
        }
        assert_eq!(s.prep_cost(), 16.0);
    }

    #[test]
    fn prepare_rejects_zero() {
        assert!(matches!(
            prepare_state(&[0.0, 0.0], PrepCostModel::Dense),
            Err(Error::ZeroVector(_))
        ));
    }

    #[test]
    fn reprep_cost_model() {
        let m = PrepCostModel::Reprep { rank: 16 };
        assert_eq!(m.cost(256), 16.0 * 64.0);
    }

    #[test]
    fn identity_block_encoding_is_transparent() {
        let be = BlockEncoding::new(vec![1.0, 0.0, 0.0, 1.0], 2, 2, 1.0, 1, 0.0).unwrap();
        let psi = AmplitudeState::new(vec![0.6, 0.8], 1.0).unwrap();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let mut ledger = ResourceLedger::new();
        let (out, success) = apply_block_encoding(&be, &psi, &mut noise, &mut ledger).unwrap();
        assert_eq!(out.amplitudes(), psi.amplitudes());
        assert!((success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_block_encoding_halves_success() {
        let be = BlockEncoding::new(vec![1.0, 0.0, 0.0, 0.0], 2, 2, 1.0, 1, 0.0).unwrap();
        let s = 0.5f64.sqrt();
        let psi = AmplitudeState::new(vec![s, s], 1.0).unwrap();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let mut ledger = ResourceLedger::new();
        let (out, success) = apply_block_encoding(&be, &psi, &mut noise, &mut ledger).unwrap();
        assert!((out.amplitudes()[0] - 1.0).abs() < 1e-12);
        assert!((success - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_success() {
        let th = 30f64.to_radians();
        let m = vec![th.cos(), -th.sin(), th.sin(), th.cos()];
        let be = BlockEncoding::new(m, 2, 2, 1.0, 1, 0.0).unwrap();
        let psi = AmplitudeState::new(vec![1.0, 0.0], 1.0).unwrap();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let mut ledger = ResourceLedger::new();
        let (out, success) = apply_block_encoding(&be, &psi, &mut noise, &mut ledger).unwrap();
        assert!((out.amplitudes()[0] - th.cos()).abs() < 1e-12);
        assert!((out.amplitudes()[1] - th.sin()).abs() < 1e-12);
        assert!((success - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alpha_below_spectral_norm_rejected() {
        let m = vec![2.0, 0.0, 0.0, 1.0];
        assert!(BlockEncoding::new(m, 2, 2, 1.5, 1, 0.0).is_err());
    }

    #[test]
    fn exact_mode_unnormalized_matvec_recovered() {
        // oracle: dense matvec, random matrices up to 64x64
        let mut rng = RandomSource::new(205);
        for &n in &[2usize, 8, 64] {
            let m: Vec<f64> = (0..n * n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let be = BlockEncoding::with_auto_alpha(m.clone(), n, n, 0.0).unwrap();
            let v: Vec<f64> = (0..n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let psi = prepare_state(&v, PrepCostModel::Dense).unwrap();
            let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
            let mut ledger = ResourceLedger::new();
            let (out, success) = apply_block_encoding(&be, &psi, &mut noise, &mut ledger).unwrap();
            let scale = success.sqrt() * be.alpha();
            let want = be.matvec(psi.amplitudes());
            for (o, w) in out.amplitudes().iter().zip(&want) {
                assert!((o * scale - w).abs() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn degenerate_image_rejected() {
        let be = BlockEncoding::new(vec![0.0, 0.0, 0.0, 1.0], 2, 2, 1.0, 1, 0.0).unwrap();
        let psi = basis_state(2, 0);
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let mut ledger = ResourceLedger::new();
        assert!(matches!(
            apply_block_encoding(&be, &psi, &mut noise, &mut ledger),
            Err(Error::DegenerateState(_))
        ));
    }

    #[test]
    fn qae_examples() {
        let mut ledger = ResourceLedger::new();
        let mut bounded = NoiseModel::new(NoiseMode::Bounded, 7);
        let r = qae_estimate(0.0, 0.1, &mut bounded, &mut ledger).unwrap();
        assert!((0.0..=0.1).contains(&r));

        let before = ledger.oracle_queries;
        let r = qae_estimate(0.25, 0.01, &mut bounded, &mut ledger).unwrap();
        assert!((0.24..=0.26).contains(&r));
        assert_eq!(ledger.oracle_queries - before, 315.0);

        let mut exact = NoiseModel::new(NoiseMode::Exact, 7);
        let before = ledger.oracle_queries;
        let r = qae_estimate(0.7, 0.05, &mut exact, &mut ledger).unwrap();
        assert_eq!(r, 0.7);
        assert!(ledger.oracle_queries > before);
    }

    #[test]
    fn qae_precision_validation() {
        let mut ledger = ResourceLedger::new();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        assert!(matches!(
            qae_estimate(0.5, 0.0, &mut noise, &mut ledger),
            Err(Error::InvalidPrecision(_))
        ));
        assert!(matches!(
            qae_estimate(0.5, 1.0, &mut noise, &mut ledger),
            Err(Error::InvalidPrecision(_))
        ));
        assert!(qae_estimate(1.5, 0.1, &mut noise, &mut ledger).is_err());
    }

    #[test]
    fn bounded_mode_never_violates_delta() {
        let mut ledger = ResourceLedger::new();
        let mut noise = NoiseModel::new(NoiseMode::Bounded, 21);
        let mut rng = RandomSource::new(4);
        for _ in 0..10_000 {
            let p = rng.uniform();
            let delta = rng.uniform_in(0.001, 0.5);
            let est = qae_estimate(p, delta, &mut noise, &mut ledger).unwrap();
            assert!((est - p).abs() <= delta + 1e-15);
        }
    }

    #[test]
    fn stochastic_mode_mostly_within_delta() {
        let mut ledger = ResourceLedger::new();
        let mut noise = NoiseModel::new(NoiseMode::Stochastic, 22);
        let delta = 0.05;
        let trials = 20_000;
        let mut within = 0usize;
        for _ in 0..trials {
            let est = qae_estimate(0.5, delta, &mut noise, &mut ledger).unwrap();
            if (est - 0.5).abs() <= delta {
                within += 1;
            }
            assert!((est - 0.5).abs() <= 2.0 * delta + 1e-15);
        }
        assert!(within as f64 / trials as f64 >= 0.95);
    }

    #[test]
    fn query_count_law_is_exact() {
        let mut ledger = ResourceLedger::new();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let delta = 0.003;
        let k = 137;
        for _ in 0..k {
            qae_estimate(0.4, delta, &mut noise, &mut ledger).unwrap();
        }
        assert_eq!(ledger.oracle_queries, k as f64 * qae_query_count(delta));
    }

    #[test]
    fn inner_product_examples() {
        let mut ledger = ResourceLedger::new();
        let mut exact = NoiseModel::new(NoiseMode::Exact, 0);

        let x = basis_state(2, 0);
        let y = AmplitudeState::new(vec![0.6, 0.8], 1.0).unwrap();
        let est = inner_product_estimate(&x, &y, 0.01, &mut exact, &mut ledger).unwrap();
        assert!((est - 0.6).abs() < 1e-12);

        let mut bounded = NoiseModel::new(NoiseMode::Bounded, 5);
        let same = inner_product_estimate(&y, &y, 0.02, &mut bounded, &mut ledger).unwrap();
        assert!((same - 1.0).abs() <= 0.02 + 1e-15);

        let e1 = basis_state(2, 1);
        let orth = inner_product_estimate(&x, &e1, 0.02, &mut bounded, &mut ledger).unwrap();
        assert!(orth.abs() <= 0.02 + 1e-15);
    }

    #[test]
    fn inner_product_charges_prep_weighted_queries() {
        let mut ledger = ResourceLedger::new();
        let mut noise = NoiseModel::new(NoiseMode::Exact, 0);
        let x = AmplitudeState::new(vec![1.0, 0.0], 3.0).unwrap();
        let y = AmplitudeState::new(vec![0.0, 1.0], 5.0).unwrap();
        inner_product_estimate(&x, &y, 0.01, &mut noise, &mut ledger).unwrap();
        assert_eq!(ledger.oracle_queries, 315.0 * 8.0);
        assert_eq!(ledger.shots, 1.0);
    }

    #[test]
    fn sampling_is_deterministic_and_concentrated() {
        let psi = basis_state(8, 3);
        let mut rng = RandomSource::new(100);
        let mut ledger = ResourceLedger::new();
        let counts = sample_measure(&psi, 1000, &mut rng, &mut ledger);
        assert_eq!(counts[3], 1000);
        assert_eq!(ledger.shots, 1000.0);
        assert_eq!(ledger.t_depth, 1000.0);

        // single shot reproduces from the seed
        let uniform = prepare_state(&[1.0; 4], PrepCostModel::Dense).unwrap();
        let mut r1 = RandomSource::new(42);
        let mut r2 = RandomSource::new(42);
        let c1 = sample_measure(&uniform, 1, &mut r1, &mut ledger);
        let c2 = sample_measure(&uniform, 1, &mut r2, &mut ledger);
        assert_eq!(c1, c2);
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let psi = prepare_state(&[1.0; 4], PrepCostModel::Dense).unwrap();
        let mut rng = RandomSource::new(7);
        let mut ledger = ResourceLedger::new();
        let shots = 1_000_000u64;
        let counts = sample_measure(&psi, shots, &mut rng, &mut ledger);
        for c in counts {
            let f = c as f64 / shots as f64;
            // binomial 5-sigma band around 1/4
            assert!((f - 0.25).abs() <= 0.0022, "frequency {f}");
        }
    }

    #[test]
    fn sampling_linf_hoeffding_band() {
        let d = 16;
        let shots = 4096u64;
        let bound = 5.0 * ((2.0 * d as f64).ln() / (2.0 * shots as f64)).sqrt();
        let mut violations = 0;
        let trials = 200;
        let root = RandomSource::new(314);
        for t in 0..trials {
            let mut state_rng = root.child(t as u64);
            let v: Vec<f64> = (0..d).map(|_| state_rng.normal()).collect();
            let psi = prepare_state(&v, PrepCostModel::Dense).unwrap();
            let mut ledger = ResourceLedger::new();
            let mut rng = root.child(1000 + t as u64);
            let counts = sample_measure(&psi, shots, &mut rng, &mut ledger);
            let worst = counts
                .iter()
                .zip(psi.amplitudes())
                .map(|(&c, &a)| (c as f64 / shots as f64 - a * a).abs())
                .fold(0.0f64, f64::max);
            if worst > bound {
                violations += 1;
            }
        }
        assert!(violations <= trials / 100, "{violations} violations");
    }

    #[test]
    fn lcu_single_state_is_identity() {
        let psi = AmplitudeState::new(vec![0.6, 0.8], 2.0).unwrap();
        let mut ledger = ResourceLedger::new();
        let out = lcu_concat(std::slice::from_ref(&psi), &[1.0], 64.0, &mut ledger).unwrap();
        assert_eq!(out.dim(), 2);
        assert_eq!(out.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn lcu_equal_weights_scale_blocks_evenly() {
        let a = basis_state(2, 0);
        let b = basis_state(2, 1);
        let mut ledger = ResourceLedger::new();
        let out = lcu_concat(&[a, b], &[1.0, 1.0], 64.0, &mut ledger).unwrap();
        let s = 0.5f64.sqrt();
        let want = [s, 0.0, 0.0, s];
        for (o, w) in out.amplitudes().iter().zip(want) {
            assert!((o - w).abs() < 1e-12);
        }
    }

    #[test]
    fn lcu_weight_ratios_follow_stacked_norm() {
        let states = vec![basis_state(2, 0), basis_state(2, 0), basis_state(2, 1)];
        let mut ledger = ResourceLedger::new();
        let out = lcu_concat(&states, &[1.0, 2.0, 2.0], 64.0, &mut ledger).unwrap();
        // stacked norm = sqrt(1 + 4 + 4) = 3; blocks scale (1, 2, 2) / 3
        assert!((out.amplitudes()[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((out.amplitudes()[2] - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.amplitudes()[5] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lcu_rejects_zero_weights() {
        let a = basis_state(2, 0);
        let b = basis_state(2, 1);
        let mut ledger = ResourceLedger::new();
        assert!(matches!(
            lcu_concat(&[a, b], &[1.0, 0.0], 64.0, &mut ledger),
            Err(Error::ZeroVector(_))
        ));
    }
}
