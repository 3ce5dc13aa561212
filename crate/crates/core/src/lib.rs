//! Numerical laboratory for idempotent Schur multipliers.
//!
//! * [`matcore`]: dense complex matrices, Schatten norms, Schur products and
//!   randomized lower bounds of multiplier norms.
//! * [`symbols`]: idempotent symbols `chi_{F > 0}` on product charts.
//! * [`geometry`]: transversality, zero-curvature and triangular-model
//!   classification of boundary points.
//! * [`multiplier`]: discretization, norm-growth sweeps, pullbacks and the
//!   finite compression map.
//! * [`harmonic`]: directional Hilbert transforms on periodic grids.
//! * [`groups`]: Lie groups, Herz-Schur symbols, Cotlar identities and the
//!   codimension-one subalgebra criterion.
//!
//! Data-parallel loops go through rayon when the `parallel` feature is on
//! (the default) and run sequentially otherwise; results are identical.

// `!(a >= b)` is used on purpose: it is also true for NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod groups;
pub mod harmonic;
pub mod matcore;
pub mod multiplier;
pub mod par;
pub mod rng;
pub mod symbols;

pub use error::{Error, Result};
pub use matcore::{DenseMatrix, SingularSpectrum, C64};
