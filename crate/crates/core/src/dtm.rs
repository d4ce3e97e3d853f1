//! Data transfer module: the quantum-classical boundary.
//!
//! Two readout protocols are emulated end to end (quantum-to-classical
//! extraction, then classical-to-quantum re-preparation):
//!
//! * **Max-norm tomography** (`linf`): every amplitude is estimated to
//!   precision `epsilon` from a sampling budget of
//!   `ceil(ln(d) / epsilon^2)` shots per pass, with a second equal-budget
//!   interference pass for signs. In the bounded model each probability is
//!   perturbed by at most `epsilon^2`, which keeps every amplitude estimate
//!   within `epsilon`; signs resolve exactly for entries of magnitude at
//!   least `2 epsilon` and are coin flips below that threshold.
//! * **Chebyshev coefficient transfer** (`dcd`): the first `r` basis
//!   coefficients are estimated to precision `delta` by signed
//!   amplitude-estimation overlaps, stored classically, and the truncated
//!   expansion is re-prepared at `r (log2 d)^2` T-depth.
//!
//! Reported reconstruction errors compare the *extracted estimate* (before
//! renormalization) against the true state; the state handed to the next
//! layer is renormalized, as the next layer's contract requires.
//!
//! Overhead accounting: each coefficient estimate runs a sequential
//! estimation circuit of `ceil(pi/delta) * C_psi` T-depth plus a
//! `(log2 d)^2` basis-preparation circuit and ends in one readout shot;
//! max-norm tomography runs the preparation circuit once per sampling shot.

use crate::chebyshev::CoeffVector;
use crate::error::{Error, Result};
use crate::qlam::{
    prepare_state, qae_query_count, sample_measure, AmplitudeState, NoiseMode, NoiseModel,
    PrepCostModel,
};
use crate::resource::{overhead, QramModel, ResourceLedger};
use crate::Basis;
use serde::{Deserialize, Serialize};

/// Tomography shot-budget constant in `shots = ceil(c * ln(d) / eps^2)`.
pub const C_TOMO: f64 = 1.0;

/// Per-pass sampling budget of max-norm tomography.
pub fn linf_shot_budget(dim: usize, epsilon: f64) -> f64 {
    (C_TOMO * (dim as f64).ln() / (epsilon * epsilon)).ceil()
}

/// Transfer protocol and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum TransferProtocol {
    /// Chebyshev coefficient transfer: keep `rank` coefficients at estimation
    /// precision `delta`.
    Dcd { rank: usize, delta: f64 },
    /// Max-norm tomography at sampling precision `epsilon`.
    Linf { epsilon: f64 },
}

impl TransferProtocol {
    pub fn name(&self) -> &'static str {
        match self {
            TransferProtocol::Dcd { .. } => "dcd",
            TransferProtocol::Linf { .. } => "linf",
        }
    }
}

/// Outcome of one quantum-to-classical-to-quantum cycle.
#[derive(Debug, Clone)]
pub struct TransferReport {
    pub protocol: TransferProtocol,
    pub dim: usize,
    /// Extracted estimate of the state, before renormalization.
    pub reconstructed: Vec<f64>,
    /// Renormalized state handed to the next layer.
    pub state: AmplitudeState,
    pub l2_error: f64,
    pub linf_error: f64,
    /// Ledger of this cycle only.
    pub ledger: ResourceLedger,
    /// Fidelity annotation of the memory load, when a qRAM model is attached.
    pub qram_fidelity: Option<f64>,
}

impl TransferReport {
    pub fn overhead(&self) -> f64 {
        overhead(&self.ledger)
    }

    pub fn csv_header() -> &'static str {
        "protocol,d,r_or_eps,delta,l2_err,linf_err,tdepth,shots,queries,q"
    }

    pub fn to_csv_row(&self) -> String {
        let (r_or_eps, delta) = match self.protocol {
            TransferProtocol::Dcd { rank, delta } => (format!("{rank}"), format!("{delta}")),
            TransferProtocol::Linf { epsilon } => (format!("{epsilon}"), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.protocol.name(),
            self.dim,
            r_or_eps,
            delta,
            self.l2_error,
            self.linf_error,
            self.ledger.t_depth,
            self.ledger.shots,
            self.ledger.oracle_queries,
            self.overhead()
        )
    }
}

/// The transfer machinery for one state dimension: owns the basis and an
/// optional qRAM fidelity annotation model.
#[derive(Debug, Clone)]
pub struct DataTransfer {
    basis: Basis,
    qram: Option<(QramModel, u32)>,
}

impl DataTransfer {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self {
            basis: Basis::new(dim)?,
            qram: None,
        })
    }

    pub fn from_basis(basis: Basis) -> Self {
        Self { basis, qram: None }
    }

    /// Attaches a qRAM model; reports then carry a fidelity annotation for
    /// the classical load (word count -> address bits, `word_bits` wide).
    pub fn with_qram_model(mut self, model: QramModel, word_bits: u32) -> Self {
        self.qram = Some((model, word_bits));
        self
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    fn qram_fidelity(&self, words: usize) -> Option<f64> {
        self.qram.map(|(model, word_bits)| {
            let address_bits = (words.max(2) as f64).log2().ceil();
            1.0 - model.infidelity(address_bits, word_bits as f64)
        })
    }

    /// Max-norm tomography: estimates every amplitude to precision
    /// `epsilon`. Charges two sampling passes and the preparation circuit
    /// once per shot.
    pub fn linf_tomography(
        &self,
        psi: &AmplitudeState,
        epsilon: f64,
        noise: &mut NoiseModel,
        ledger: &mut ResourceLedger,
    ) -> Result<Vec<f64>> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidPrecision(epsilon));
        }
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        if psi.dim() < 2 {
            return Err(Error::InvalidDimension(
                "tomography needs dimension at least 2".into(),
            ));
        }
        let shots = linf_shot_budget(psi.dim(), epsilon);
        ledger.add_shots(2.0 * shots);
        ledger.add_t_depth(psi.prep_cost() * 2.0 * shots);

        let amplitudes = psi.amplitudes();
        let estimate = match noise.mode() {
            NoiseMode::Exact => amplitudes.to_vec(),
            NoiseMode::Bounded => {
                let eps_sq = epsilon * epsilon;
                amplitudes
                    .iter()
                    .map(|&a| {
                        let p = a * a;
                        let p_est = (p + noise.draw_error(eps_sq)).max(0.0);
                        let magnitude = p_est.sqrt();
                        let sign = if a.abs() >= 2.0 * epsilon {
                            a.signum()
                        } else {
                            noise.rng().sign()
                        };
                        sign * magnitude
                    })
                    .collect()
            }
            NoiseMode::Stochastic => {
                let mut scratch = ResourceLedger::new();
                let counts = sample_measure(psi, shots as u64, noise.rng(), &mut scratch);
                counts
                    .iter()
                    .zip(amplitudes)
                    .map(|(&c, &a)| {
                        let magnitude = (c as f64 / shots).sqrt();
                        let sign = if a.abs() >= 2.0 * epsilon {
                            a.signum()
                        } else {
                            noise.rng().sign()
                        };
                        sign * magnitude
                    })
                    .collect()
            }
        };
        Ok(estimate)
    }

    /// Quantum-to-classical stage of the coefficient transfer: signed
    /// estimates of the first `rank` basis coefficients to precision `delta`.
    ///
    /// Charges `rank * ceil(pi/delta) * C_psi` oracle queries, the matching
    /// sequential circuits (plus `(log2 d)^2` basis preparation each) as
    /// T-depth, and one readout shot per coefficient.
    pub fn dcd_q2c(
        &self,
        psi: &AmplitudeState,
        rank: usize,
        delta: f64,
        noise: &mut NoiseModel,
        ledger: &mut ResourceLedger,
    ) -> Result<CoeffVector<f64>> {
        if rank > self.dim() {
            return Err(Error::RankTooLarge {
                rank,
                dim: self.dim(),
            });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidPrecision(delta));
        }
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let exact = self.basis.forward(psi.amplitudes(), rank)?;
        let estimates: Vec<f64> = exact
            .coeffs()
            .iter()
            .map(|&c| (c + noise.draw_error(delta)).clamp(-1.0, 1.0))
            .collect();
        let queries = qae_query_count(delta);
        let basis_prep = self.basis_prep_tdepth();
        ledger.add_queries(rank as f64 * queries * psi.prep_cost());
        ledger.add_t_depth(rank as f64 * (queries * psi.prep_cost() + basis_prep));
        ledger.add_shots(rank as f64);
        CoeffVector::new(estimates, delta, self.dim())
    }

    /// Classical-to-quantum stage: loads the stored coefficients and
    /// re-prepares the truncated expansion, renormalized to a valid state.
    pub fn dcd_c2q(
        &self,
        c: &CoeffVector<f64>,
        cost_model: PrepCostModel,
        ledger: &mut ResourceLedger,
    ) -> Result<AmplitudeState> {
        let amplitudes = self.basis.reconstruct(c, true)?;
        let cost = cost_model.cost(self.dim()).max(1.0);
        ledger.add_t_depth(cost);
        AmplitudeState::new(amplitudes, cost)
    }

    /// Declared basis-state preparation cost, `(log2 d)^2`.
    pub fn basis_prep_tdepth(&self) -> f64 {
        let log = (self.dim() as f64).log2();
        log * log
    }

    /// One full transfer cycle under the chosen protocol. Errors compare the
    /// extracted estimate against the true state; the returned report also
    /// carries the renormalized re-prepared state and this cycle's ledger.
    pub fn roundtrip(
        &self,
        psi: &AmplitudeState,
        protocol: TransferProtocol,
        noise: &mut NoiseModel,
        ledger: &mut ResourceLedger,
    ) -> Result<TransferReport> {
        let mut local = ResourceLedger::new();
        let (reconstructed, state, words) = match protocol {
            TransferProtocol::Dcd { rank, delta } => {
                let coeffs = self.dcd_q2c(psi, rank, delta, noise, &mut local)?;
                let raw = self.basis.reconstruct(&coeffs, false)?;
                let state = self.dcd_c2q(&coeffs, PrepCostModel::Reprep { rank }, &mut local)?;
                (raw, state, rank)
            }
            TransferProtocol::Linf { epsilon } => {
                let estimate = self.linf_tomography(psi, epsilon, noise, &mut local)?;
                let state = prepare_state(&estimate, PrepCostModel::Dense)?;
                local.add_t_depth(state.prep_cost());
                (estimate, state, self.dim())
            }
        };
        let mut l2 = 0.0;
        let mut linf = 0.0f64;
        for (est, truth) in reconstructed.iter().zip(psi.amplitudes()) {
            let e = (est - truth).abs();
            l2 += e * e;
            linf = linf.max(e);
        }
        ledger.merge(&local);
        Ok(TransferReport {
            protocol,
            dim: self.dim(),
            qram_fidelity: self.qram_fidelity(words),
            reconstructed,
            state,
            l2_error: l2.sqrt(),
            linf_error: linf,
            ledger: local,
        })
    }

    /// Measurement snapshot of a value tensor (classical scale known to the
    /// hybrid controller): normalizes, runs the protocol's extraction, and
    /// rescales. A zero tensor snapshots to itself at no sampling cost.
    pub fn snapshot_values(
        &self,
        values: &[f64],
        protocol: TransferProtocol,
        noise: &mut NoiseModel,
        ledger: &mut ResourceLedger,
    ) -> Result<Vec<f64>> {
        let norm = crate::scalar::l2_norm(values);
        if norm < 1e-300 {
            return Ok(values.to_vec());
        }
        if values.len() == 1 {
            // a singleton with tracked scale is classically determined up to
            // sign; one interference shot resolves it
            ledger.add_shots(1.0);
            return Ok(values.to_vec());
        }
        let psi = prepare_state(values, PrepCostModel::Dense)?;
        let estimate = match protocol {
            TransferProtocol::Dcd { rank, delta } => {
                let coeffs = self.dcd_q2c(&psi, rank, delta, noise, ledger)?;
                self.basis.reconstruct(&coeffs, false)?
            }
            TransferProtocol::Linf { epsilon } => {
                self.linf_tomography(&psi, epsilon, noise, ledger)?
            }
        };
        Ok(estimate.iter().map(|e| e * norm).collect())
    }
}
