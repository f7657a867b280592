//! Numerical toolkit for g-frames on finite-dimensional Hilbert spaces.
//!
//! A g-frame is a family of operators `Λ_j : ℂⁿ → ℂ^{d_j}` whose block
//! energies `Σ_j ‖Λ_j f‖²` are bounded above and below by multiples of
//! `‖f‖²`. The crate computes optimal bounds, canonical and alternate
//! duals, g-Riesz / g-orthonormal classification, perturbation constants,
//! and two-index g-coherent states on a truncated Fock space.

// Negated float comparisons are deliberate: NaN must take the error path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod coherent;
pub mod duality;
pub mod error;
pub mod families;
pub mod format;
pub mod frame;
pub mod linalg;
pub mod perturbation;
pub mod quadrature;

pub use check::Check;
pub use error::{Error, Result};
pub use frame::{
    check_biorthogonal, check_dual_pair, make_gon_basis, make_griesz, Classification,
    FrameBounds, GFrame, StackedOperator,
};
pub use format::{parse_spec, serialize_spec};
pub use linalg::{CMatrix, CVector, Tolerances};
pub use num_complex::Complex64;
