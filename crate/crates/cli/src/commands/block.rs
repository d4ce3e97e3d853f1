//! Single-block execution over a (noise mode, precision, seed) grid,
//! reporting infidelity against the classical reference and the overhead Q.

use super::{invalid, invalid_msg, thread_pool, CmdResult};
use crate::config::{derive_seed, BlockFile, ModelKind};
use crate::output::{Cell, Table};
use qdl_core::dtm::DataTransfer;
use qdl_core::models::{
    reference, residual_block_forward, transformer_block_forward, TransformerDtm,
};
use qdl_core::qam::CostTable;
use qdl_core::qlam::{NoiseMode, NoiseModel};
use qdl_core::resource::LedgerBook;
use qdl_core::rng::RandomSource;
use qdl_core::scalar::l2_norm;
use rayon::prelude::*;

pub const COLUMNS: [&str; 9] = [
    "kind",
    "noise",
    "precision",
    "seed",
    "infidelity",
    "tdepth",
    "shots",
    "queries",
    "q",
];

type KeyedRow = ((usize, u64, u64), Vec<Cell>);

/// l2 distance between the unit-normalized value vectors.
fn state_infidelity(got: &[f64], want: &[f64]) -> f64 {
    let (ng, nw) = (l2_norm(got), l2_norm(want));
    if ng < 1e-300 || nw < 1e-300 {
        return if ng < 1e-300 && nw < 1e-300 { 0.0 } else { 1.0 };
    }
    got.iter()
        .zip(want)
        .map(|(g, w)| (g / ng - w / nw).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn run(file: &BlockFile, mode_flag: Option<NoiseMode>, base_seed: u64, jobs: usize) -> CmdResult<Table> {
    if file.grid.precisions.is_empty() || file.grid.noise_modes.is_empty() {
        return Err(invalid_msg("block grid needs noise_modes and precisions"));
    }
    if let Some(&p) = file
        .grid
        .precisions
        .iter()
        .find(|p| !(0.0 < **p && **p < 1.0))
    {
        return Err(invalid_msg(format!("precision {p} outside (0, 1)")));
    }
    let modes: Vec<NoiseMode> = match mode_flag {
        // the --noise flag collapses the grid to one mode
        Some(m) => vec![m],
        None => file
            .grid
            .noise_modes
            .iter()
            .map(|s| s.parse::<NoiseMode>())
            .collect::<qdl_core::Result<_>>()
            .map_err(invalid)?,
    };
    // probe-build the instance once so config errors surface as validation
    match file.block.kind {
        ModelKind::Resnet => {
            let spec = file
                .block
                .resnet
                .as_ref()
                .ok_or_else(|| invalid_msg("block.kind = resnet needs a [block.resnet] table"))?;
            spec.build(
                file.transfer
                    .protocol_at(file.grid.precisions[0])
                    .map_err(invalid)?,
                &mut RandomSource::new(0),
            )
            .map_err(invalid)?;
        }
        ModelKind::Transformer => {
            let spec = file.block.transformer.as_ref().ok_or_else(|| {
                invalid_msg("block.kind = transformer needs a [block.transformer] table")
            })?;
            spec.build(
                file.transfer
                    .protocol_at(file.grid.precisions[0])
                    .map_err(invalid)?,
                &mut RandomSource::new(0),
            )
            .map_err(invalid)?;
        }
    }

    let table_costs = match &file.block.cost_table {
        Some(path) => CostTable::from_toml_file(path).map_err(invalid)?,
        None => CostTable::default(),
    };
    let mut points = Vec::new();
    for (mi, &mode) in modes.iter().enumerate() {
        for &precision in &file.grid.precisions {
            for si in 0..file.grid.seeds {
                points.push((mi, mode, precision, si));
            }
        }
    }

    let pool = thread_pool(jobs)?;
    let rows: Vec<anyhow::Result<KeyedRow>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(mi, mode, precision, si)| {
                let protocol = file.transfer.protocol_at(precision)?;
                let mut instance_rng =
                    RandomSource::new(derive_seed(base_seed, &[10, si]));
                let noise_seed =
                    derive_seed(base_seed, &[11, mi as u64, precision.to_bits(), si]);
                let mut noise = NoiseModel::new(mode, noise_seed);
                let mut book = LedgerBook::new();
                let (kind, infidelity) = match file.block.kind {
                    ModelKind::Resnet => {
                        let spec = file.block.resnet.as_ref().unwrap();
                        let inst = spec.build(protocol, &mut instance_rng)?;
                        let dt = DataTransfer::new(inst.config.dim())?;
                        let out = residual_block_forward(
                            &inst.input,
                            &inst.kernel,
                            &inst.bias,
                            &inst.config,
                            &dt,
                            &table_costs,
                            &mut noise,
                            &mut book,
                        )?;
                        let want = reference::residual_block(
                            &inst.input,
                            &inst.kernel,
                            &inst.bias,
                            inst.config.gamma,
                            inst.config.beta,
                            inst.config.eps,
                        );
                        ("resnet", state_infidelity(out.values.data(), want.data()))
                    }
                    ModelKind::Transformer => {
                        let spec = file.block.transformer.as_ref().unwrap();
                        let inst = spec.build(protocol, &mut instance_rng)?;
                        let dtm = TransformerDtm::new(
                            inst.config.batch,
                            inst.config.tokens,
                            inst.config.embed,
                        )?;
                        let out = transformer_block_forward(
                            &inst.input,
                            &inst.attn,
                            &inst.ffn,
                            &inst.config,
                            &dtm,
                            &table_costs,
                            &mut noise,
                            &mut book,
                        )?;
                        let want = reference::transformer_block(
                            &inst.input,
                            &inst.attn.w_q,
                            &inst.attn.w_k,
                            &inst.attn.w_v,
                            &inst.attn.w_o,
                            inst.config.heads,
                            &inst.ffn.w1,
                            &inst.ffn.b1,
                            &inst.ffn.w2,
                            &inst.ffn.b2,
                            inst.config.ln_eps,
                        );
                        (
                            "transformer",
                            state_infidelity(out.values.data(), want.data()),
                        )
                    }
                };
                let total = book.total();
                Ok((
                    (mi, precision.to_bits(), si),
                    vec![
                        Cell::Text(kind.to_string()),
                        Cell::Text(mode.to_string()),
                        Cell::Float(precision),
                        Cell::Int(si),
                        Cell::Float(infidelity),
                        Cell::Float(total.t_depth),
                        Cell::Float(total.shots),
                        Cell::Float(total.oracle_queries),
                        Cell::Float(total.t_depth * total.shots),
                    ],
                ))
            })
            .collect()
    });

    let mut keyed = rows.into_iter().collect::<anyhow::Result<Vec<_>>>()?;
    keyed.sort_by_key(|row| row.0);
    let mut table = Table::new(COLUMNS.to_vec());
    for (_, row) in keyed {
        table.push(row);
    }
    Ok(table)
}
