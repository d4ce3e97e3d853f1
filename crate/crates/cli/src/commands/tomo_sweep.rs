//! Max-norm tomography sweep over (dimension, precision, seed) grids on
//! synthetic power-law states.

use super::{invalid, invalid_msg, thread_pool, CmdResult};
use crate::config::{derive_seed, SweepFile};
use crate::output::{Cell, Table};
use qdl_core::dtm::{DataTransfer, TransferProtocol};
use qdl_core::qlam::{NoiseMode, NoiseModel};
use qdl_core::resource::{overhead, ResourceLedger};
use qdl_core::rng::RandomSource;
use qdl_core::synth::{make_compressible_state, make_toy_task, SpectrumSpec, ToyTaskSpec};
use rayon::prelude::*;

type KeyedRow = ((usize, u64, u64), Vec<Cell>);

pub const COLUMNS: [&str; 10] = [
    "d",
    "epsilon",
    "seed",
    "l2_err",
    "accuracy",
    "tdepth",
    "shots",
    "queries",
    "q",
    "q_baseline",
];

pub fn run(
    file: &SweepFile,
    mode: NoiseMode,
    base_seed: u64,
    jobs: usize,
) -> CmdResult<Table> {
    let sweep = &file.sweep;
    if sweep.input_dims.is_empty() || sweep.epsilons.is_empty() {
        return Err(invalid_msg(
            "tomo-sweep needs non-empty input_dims and epsilons grids",
        ));
    }
    if let Some(&e) = sweep.epsilons.iter().find(|e| !(0.0 < **e && **e < 1.0)) {
        return Err(invalid_msg(format!(
            "sampling precision {e} outside (0, 1)"
        )));
    }
    if sweep.seeds == 0 {
        return Err(invalid_msg("seeds must be at least 1"));
    }
    let dims = sweep
        .input_dims
        .iter()
        .map(|&i| sweep.model.tensor_dim(i))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(invalid)?;

    let pool = thread_pool(jobs)?;
    let mut keyed: Vec<KeyedRow> = Vec::new();
    for &n in &dims {
        let dt = DataTransfer::new(n)?;
        let per_seed: Vec<anyhow::Result<Vec<KeyedRow>>> =
            pool.install(|| {
                (0..sweep.seeds)
                    .into_par_iter()
                    .map(|si| {
                        let state_seed = derive_seed(base_seed, &[1, n as u64, si]);
                        let psi = make_compressible_state(
                            &SpectrumSpec {
                                dim: n,
                                decay: sweep.spectrum_decay,
                                seed: state_seed,
                            },
                            dt.basis(),
                        )?;
                        let task = if sweep.with_task {
                            Some(make_toy_task(
                                &ToyTaskSpec {
                                    n_samples: sweep.task_samples,
                                    dim: n,
                                    seed: derive_seed(base_seed, &[4, n as u64, si]),
                                    separation: 1.0,
                                },
                                dt.basis(),
                            )?)
                        } else {
                            None
                        };
                        let mut rows = Vec::new();
                        for &epsilon in &sweep.epsilons {
                            let noise_seed = derive_seed(
                                base_seed,
                                &[2, n as u64, epsilon.to_bits(), si],
                            );
                            let mut noise = NoiseModel::new(mode, noise_seed);
                            let mut ledger = ResourceLedger::new();
                            let report = dt.roundtrip(
                                &psi,
                                TransferProtocol::Linf { epsilon },
                                &mut noise,
                                &mut ledger,
                            )?;
                            let accuracy = match &task {
                                Some(t) => {
                                    let acc_seed = derive_seed(
                                        base_seed,
                                        &[3, n as u64, epsilon.to_bits(), si],
                                    );
                                    let root = RandomSource::new(acc_seed);
                                    let mut scratch = ResourceLedger::new();
                                    let acc = t.accuracy_via(|i, state| {
                                        let mut sample_noise = NoiseModel::from_source(
                                            mode,
                                            root.child(i as u64),
                                        );
                                        dt.linf_tomography(
                                            state,
                                            epsilon,
                                            &mut sample_noise,
                                            &mut scratch,
                                        )
                                    })?;
                                    Cell::Float(acc)
                                }
                                None => Cell::Empty,
                            };
                            rows.push((
                                (n, epsilon.to_bits(), si),
                                vec![
                                    Cell::Int(n as u64),
                                    Cell::Float(epsilon),
                                    Cell::Int(si),
                                    Cell::Float(report.l2_error),
                                    accuracy,
                                    Cell::Float(report.ledger.t_depth),
                                    Cell::Float(report.ledger.shots),
                                    Cell::Float(report.ledger.oracle_queries),
                                    Cell::Float(overhead(&report.ledger)),
                                    Cell::Float(n as f64 * super::dcd_sweep::Q_BASELINE_PER_DIM),
                                ],
                            ));
                        }
                        Ok(rows)
                    })
                    .collect()
            });
        for r in per_seed {
            keyed.extend(r?);
        }
    }
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut table = Table::new(COLUMNS.to_vec());
    for (_, row) in keyed {
        table.push(row);
    }
    Ok(table)
}
