//! Resource accounting: ledgers, the overhead metric, closed-form overhead
//! models, and the qRAM infidelity model with fitting and extrapolation.
//!
//! The overhead of a run is `Q = (T-depth) x (sampling shots)`. T-depth and
//! oracle queries accumulate as `f64` (cost laws include real-valued factors
//! such as `(log2 d)^2`); counter sums stay exact far beyond any budget this
//! emulator charges.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Accumulators for one execution context. Counters are monotone within a
/// run; merging ledgers is a component-wise sum (ancilla high-water takes the
/// max, live counts the sum).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResourceLedger {
    pub t_depth: f64,
    pub shots: f64,
    pub oracle_queries: f64,
    pub ancilla_live: u64,
    pub ancilla_high_water: u64,
}

impl ResourceLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_t_depth(&mut self, depth: f64) {
        debug_assert!(depth >= 0.0);
        self.t_depth += depth;
    }

    pub fn add_shots(&mut self, shots: f64) {
        debug_assert!(shots >= 0.0);
        self.shots += shots;
    }

    pub fn add_queries(&mut self, queries: f64) {
        debug_assert!(queries >= 0.0);
        self.oracle_queries += queries;
    }

    pub fn ancilla_alloc(&mut self, count: u64) {
        self.ancilla_live += count;
        self.ancilla_high_water = self.ancilla_high_water.max(self.ancilla_live);
    }

    pub fn ancilla_release(&mut self, count: u64) {
        debug_assert!(count <= self.ancilla_live, "ancilla release underflow");
        self.ancilla_live = self.ancilla_live.saturating_sub(count);
    }

    pub fn merge(&mut self, other: &ResourceLedger) {
        self.t_depth += other.t_depth;
        self.shots += other.shots;
        self.oracle_queries += other.oracle_queries;
        self.ancilla_live += other.ancilla_live;
        self.ancilla_high_water = self.ancilla_high_water.max(other.ancilla_high_water);
    }
}

/// Quantum overhead `Q = T-depth x shots`.
pub fn overhead(ledger: &ResourceLedger) -> f64 {
    ledger.t_depth * ledger.shots
}

/// A set of named ledgers, one per pipeline stage, so scaling studies can
/// attribute cost (e.g. factor the data-transfer term out of an arithmetic
/// scaling fit). Keys are ordered for deterministic reporting.
#[derive(Debug, Clone, Default)]
pub struct LedgerBook {
    entries: BTreeMap<String, ResourceLedger>,
}

impl LedgerBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ledger(&mut self, stage: &str) -> &mut ResourceLedger {
        self.entries.entry(stage.to_string()).or_default()
    }

    pub fn get(&self, stage: &str) -> Option<&ResourceLedger> {
        self.entries.get(stage)
    }

    pub fn stages(&self) -> impl Iterator<Item = (&str, &ResourceLedger)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Component-wise sum over all stages.
    pub fn total(&self) -> ResourceLedger {
        let mut total = ResourceLedger::new();
        for ledger in self.entries.values() {
            total.merge(ledger);
        }
        total
    }

    /// Sum over all stages except the named ones.
    pub fn total_excluding(&self, skip: &[&str]) -> ResourceLedger {
        let mut total = ResourceLedger::new();
        for (name, ledger) in &self.entries {
            if !skip.contains(&name.as_str()) {
                total.merge(ledger);
            }
        }
        total
    }
}

/// Closed-form overhead model for a residual block: `C K^2 x S(B,C,H,W)`,
/// with log factors suppressed. `sampling` supplies the state sampling
/// overhead S.
pub fn qresnet_overhead_model<S>(b: usize, c: usize, h: usize, w: usize, k: usize, sampling: S) -> f64
where
    S: Fn(usize, usize, usize, usize) -> f64,
{
    (c * k * k) as f64 * sampling(b, c, h, w)
}

/// Closed-form overhead model for multi-head self-attention:
/// `d^2 log2(d) B (log2 N)^2 x S(B,N,d)`; the polylog in N is realized as a
/// squared log.
pub fn mhsa_overhead_model<S>(b: usize, n: usize, d: usize, sampling: S) -> f64
where
    S: Fn(usize, usize, usize) -> f64,
{
    debug_assert!(n >= 2 && d >= 2);
    let d_f = d as f64;
    let n_f = n as f64;
    d_f * d_f * d_f.log2() * b as f64 * n_f.log2().powi(2) * sampling(b, n, d)
}

/// qRAM infidelity model `I(n, k) = kappa * n * (n + k) + c0`, clamped to
/// [0, 1] where it is read as an infidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QramModel {
    pub kappa: f64,
    pub c0: f64,
}

impl QramModel {
    pub fn infidelity(&self, n: f64, k: f64) -> f64 {
        (self.kappa * n * (n + k) + self.c0).clamp(0.0, 1.0)
    }
}

/// Predicted infidelity of an `(n, k)` qRAM under the fitted model.
pub fn qram_infidelity(n: u32, k: u32, model: &QramModel) -> f64 {
    model.infidelity(n as f64, k as f64)
}

/// Reference average-fidelity anchors for (address, word) = (30, 32) and
/// (30, 64) memories; fitted predictions are printed next to them, never
/// asserted against them.
pub const ANCHOR_FIDELITY_30_32: f64 = 0.91;
pub const ANCHOR_FIDELITY_30_64: f64 = 0.87;

/// Result of a least-squares fit of [`QramModel`] to `(n, k, infidelity)`
/// samples.
#[derive(Debug, Clone)]
pub struct QramFit {
    pub model: QramModel,
    pub residual_rms: f64,
}

/// Single-stage least-squares fit of `I = kappa * n(n+k) + c0`.
pub fn fit_qram(data: &[(f64, f64, f64)]) -> Result<QramFit> {
    if data.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            data.len()
        )));
    }
    let xs: Vec<f64> = data.iter().map(|&(n, k, _)| n * (n + k)).collect();
    let ys: Vec<f64> = data.iter().map(|&(_, _, i)| i).collect();
    let (kappa, c0) = linear_fit(&xs, &ys)?;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (kappa * x + c0);
        ss += r * r;
    }
    Ok(QramFit {
        model: QramModel { kappa, c0 },
        residual_rms: (ss / data.len() as f64).sqrt(),
    })
}

/// Two-stage fit: extrapolate `I(n, k)` to `n = target_n` within each fixed-k
/// group using the `n(n+k)` law, then fit the extrapolated values linearly in
/// `k`.
#[derive(Debug, Clone)]
pub struct TwoStageFit {
    pub target_n: f64,
    /// Per-group `(k, kappa_k, c0_k, extrapolated I(target_n, k))`.
    pub per_k: Vec<(f64, f64, f64, f64)>,
    /// Linear model `I(target_n, k) = intercept + slope * k`.
    pub slope: f64,
    pub intercept: f64,
}

impl TwoStageFit {
    pub fn predict(&self, k: f64) -> f64 {
        (self.intercept + self.slope * k).clamp(0.0, 1.0)
    }
}

pub fn fit_qram_two_stage(data: &[(f64, f64, f64)], target_n: f64) -> Result<TwoStageFit> {
    let mut groups: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for &(n, k, i) in data {
        groups.entry(k.to_bits()).or_default().push((n, i));
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateFit(
            "two-stage fit needs at least two distinct word lengths".into(),
        ));
    }
    let mut per_k = Vec::new();
    let mut ks = Vec::new();
    let mut extrapolated = Vec::new();
    for (bits, points) in groups {
        let k = f64::from_bits(bits);
        if points.len() < 2 {
            return Err(Error::DegenerateFit(format!(
                "word length {k} has fewer than 2 samples"
            )));
        }
        let xs: Vec<f64> = points.iter().map(|&(n, _)| n * (n + k)).collect();
        let ys: Vec<f64> = points.iter().map(|&(_, i)| i).collect();
        let (kappa_k, c0_k) = linear_fit(&xs, &ys)?;
        let at_target = kappa_k * target_n * (target_n + k) + c0_k;
        per_k.push((k, kappa_k, c0_k, at_target));
        ks.push(k);
        extrapolated.push(at_target);
    }
    let (slope, intercept) = linear_fit(&ks, &extrapolated)?;
    Ok(TwoStageFit {
        target_n,
        per_k,
        slope,
        intercept,
    })
}

/// Ordinary least squares for `y = a x + b`; `DegenerateFit` when the design
/// has no spread in x.
fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let scale = xs.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if sxx <= scale * 1e-24 {
        return Err(Error::DegenerateFit(
            "design matrix is rank deficient (no spread in the regressor)".into(),
        ));
    }
    let a = sxy / sxx;
    Ok((a, mean_y - a * mean_x))
}

/// Log-log slope of `ys` against `xs`; both must be positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Ok(linear_fit(&lx, &ly)?.0)
}

/// Coefficient of determination of `ys` regressed linearly on `xs`.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (a, b) = linear_fit(xs, ys)?;
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        ss_res += (y - (a * x + b)).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    if ss_tot == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Reads `(n, k, infidelity)` rows from CSV; a leading non-numeric header row
/// is skipped.
pub fn read_fit_points<R: std::io::Read>(reader: R) -> Result<Vec<(f64, f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut points = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() < 3 {
            return Err(Error::Config(format!(
                "fit input row {} has {} fields; expected n,k,infidelity",
                idx + 1,
                record.len()
            )));
        }
        let parse = |field: &str| field.trim().parse::<f64>();
        match (parse(&record[0]), parse(&record[1]), parse(&record[2])) {
            (Ok(n), Ok(k), Ok(i)) => points.push((n, k, i)),
            _ if idx == 0 => continue, // header row
            _ => {
                return Err(Error::Config(format!(
                    "fit input row {} is not numeric: {:?}",
                    idx + 1,
                    record
                )))
            }
        }
    }
    Ok(points)
}
