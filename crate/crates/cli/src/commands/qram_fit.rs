//! Fits the memory infidelity model `I = kappa n (n + k) + c0` to measured
//! points and extrapolates to the (30, 32) and (30, 64) configurations,
//! printed beside the externally reported fidelity anchors (the anchors are
//! context, never an assertion).

use super::{invalid, CmdResult};
use crate::output::{Cell, Table};
use qdl_core::resource::{
    fit_qram, fit_qram_two_stage, read_fit_points, ANCHOR_FIDELITY_30_32, ANCHOR_FIDELITY_30_64,
};
use std::path::Path;

pub const COLUMNS: [&str; 8] = [
    "method",
    "kappa",
    "c0",
    "rms",
    "pred_fid_30_32",
    "pred_fid_30_64",
    "anchor_fid_30_32",
    "anchor_fid_30_64",
];

pub fn run(input: &Path, two_stage: bool, target_n: f64) -> CmdResult<Table> {
    let reader = std::fs::File::open(input)
        .map_err(|e| invalid(anyhow::anyhow!("cannot open {}: {e}", input.display())))?;
    let points = read_fit_points(reader).map_err(invalid)?;

    let mut table = Table::new(COLUMNS.to_vec());
    let fit = fit_qram(&points)?;
    table.push(vec![
        Cell::Text("single".into()),
        Cell::Float(fit.model.kappa),
        Cell::Float(fit.model.c0),
        Cell::Float(fit.residual_rms),
        Cell::Float(1.0 - fit.model.infidelity(target_n, 32.0)),
        Cell::Float(1.0 - fit.model.infidelity(target_n, 64.0)),
        Cell::Float(ANCHOR_FIDELITY_30_32),
        Cell::Float(ANCHOR_FIDELITY_30_64),
    ]);
    if two_stage {
        let ts = fit_qram_two_stage(&points, target_n)?;
        table.push(vec![
            Cell::Text("two-stage".into()),
            Cell::Empty,
            Cell::Empty,
            Cell::Empty,
            Cell::Float(1.0 - ts.predict(32.0)),
            Cell::Float(1.0 - ts.predict(64.0)),
            Cell::Float(ANCHOR_FIDELITY_30_32),
            Cell::Float(ANCHOR_FIDELITY_30_64),
        ]);
    }
    Ok(table)
}
