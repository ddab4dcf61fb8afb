//! Pseudo-spectral simulation and long-time analysis of the coupled cubic
//! Schrödinger system
//!
//! ```text
//! i∂_t u + ∂_xx u = |v|² u,
//! i∂_t v + ∂_xx v = |u|² v
//! ```
//!
//! on the real line, with data prescribed at `t = 1`.

// Parameter checks use negated comparisons so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod propagator;
pub mod remainder;
pub mod scattering;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{Result, ScatterError};
pub use spectral::{AnalysisParams, ComplexField, Grid1D, Side};
