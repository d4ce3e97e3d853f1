//! Quantum arithmetic module emulation.
//!
//! Operations act on digitally encoded (fixed-point) tensors and charge a
//! [`crate::resource::ResourceLedger`] according to a [`CostTable`]. The
//! charging convention
//! is element-parallel: arithmetic applied across an index register costs one
//! depth layer, not one per element; only genuinely sequential structure
//! (contraction length, kernel taps, iteration count, output components of a
//! per-item linear map) multiplies depth.
//!
//! Ancilla accounting: every op allocates its transient register footprint
//! (outputs plus scratch) on the ledger and releases it when the op's
//! uncomputation completes, so the live count always returns to its pre-op
//! value and the high-water mark records the op's peak footprint.

mod cost;
mod elementwise;
mod linalg;

pub use cost::CostTable;
pub use elementwise::{
    arccos_qfbe, newton_iters_for_fraction_bits, newton_reciprocal_iterates, qbn, qrelu,
    reciprocal_newton,
};
pub use linalg::{qadd, qconv, qlinear, tensor_dot};
