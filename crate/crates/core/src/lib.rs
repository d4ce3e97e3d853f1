//! Desk-scale emulator and resource estimator for hybrid quantum-classical
//! deep-learning blocks.
//!
//! The crate models three circuit families and the boundary between them:
//!
//! * [`qam`] — reversible fixed-point arithmetic (tensor ops, nonlinearities,
//!   iterative function evaluation) with per-operation T-depth costing;
//! * [`qlam`] — amplitude states, block-encoding application, and
//!   amplitude-estimation readout under exact / bounded / stochastic noise;
//! * [`dtm`] — the classical boundary: max-norm tomography, the Chebyshev
//!   coefficient-transfer protocol, and state re-preparation.
//!
//! [`models`] composes these into a residual convolution block and a
//! multi-head attention block (forward and linear-layer backward passes);
//! [`resource`] accumulates T-depth / shots / oracle queries and evaluates
//! the overhead metric `Q = T-depth x shots`; [`synth`] generates
//! compressible synthetic states and a toy classification task for
//! accuracy-versus-rank studies.
//!
//! Transform code is generic over the scalar (see [`scalar::Real`]); the
//! aliases below pin the `f64` instantiations the rest of the stack uses.

pub mod chebyshev;
pub mod dtm;
pub mod error;
pub mod fixed;
pub mod models;
pub mod qam;
pub mod qlam;
pub mod resource;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};

/// `f64` discrete Chebyshev basis.
pub type Basis = chebyshev::ChebyshevBasis<f64>;
/// `f64` coefficient vector.
pub type Coeffs = chebyshev::CoeffVector<f64>;
