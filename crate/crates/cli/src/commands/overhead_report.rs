//! Closed-form overhead model curves for the two block families.

use super::{invalid_msg, CmdResult};
use crate::config::{ModelKind, OverheadFile};
use crate::output::{Cell, Table};
use qdl_core::resource::{mhsa_overhead_model, qresnet_overhead_model};

pub const RESNET_COLUMNS: [&str; 7] = ["model", "b", "c", "h", "w", "k", "overhead"];
pub const MHSA_COLUMNS: [&str; 5] = ["model", "b", "n", "d", "overhead"];

pub fn run(file: &OverheadFile) -> CmdResult<Table> {
    let o = &file.overhead;
    match o.model {
        ModelKind::Resnet => {
            if o.channels.is_empty() || o.kernels.is_empty() {
                return Err(invalid_msg(
                    "resnet overhead report needs channels and kernels grids",
                ));
            }
            let mut table = Table::new(RESNET_COLUMNS.to_vec());
            for &c in &o.channels {
                for &k in &o.kernels {
                    let q = qresnet_overhead_model(o.batch, c, o.height, o.width, k, |_, _, _, _| {
                        o.sampling
                    });
                    table.push(vec![
                        Cell::Text("resnet".into()),
                        Cell::Int(o.batch as u64),
                        Cell::Int(c as u64),
                        Cell::Int(o.height as u64),
                        Cell::Int(o.width as u64),
                        Cell::Int(k as u64),
                        Cell::Float(q),
                    ]);
                }
            }
            Ok(table)
        }
        ModelKind::Transformer => {
            if o.embed_dims.is_empty() || o.tokens.is_empty() {
                return Err(invalid_msg(
                    "transformer overhead report needs embed_dims and tokens grids",
                ));
            }
            if o.embed_dims.iter().chain(&o.tokens).any(|&v| v < 2) {
                return Err(invalid_msg("embed_dims and tokens entries must be >= 2"));
            }
            let mut table = Table::new(MHSA_COLUMNS.to_vec());
            for &n in &o.tokens {
                for &d in &o.embed_dims {
                    let q = mhsa_overhead_model(o.batch, n, d, |_, _, _| o.sampling);
                    table.push(vec![
                        Cell::Text("mhsa".into()),
                        Cell::Int(o.batch as u64),
                        Cell::Int(n as u64),
                        Cell::Int(d as u64),
                        Cell::Float(q),
                    ]);
                }
            }
            Ok(table)
        }
    }
}
