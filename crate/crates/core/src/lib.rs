//! Numerical core for the modified Mann iteration of λ-strict pseudocontractions.
//!
//! Everything here is allocation-only (`alloc`), with no IO, so the crate
//! builds as `no_std`. File formats and the command-line front end live in
//! the `mannlab` crate.
//!
//! Layout:
//!
//! - [`space`]: finite-dimensional smooth normed spaces (euclidean and
//!   p-norm), duality mappings, smoothness constants.
//! - [`operators`]: the strict-pseudocontraction test gallery, sampled
//!   certification, averaged maps and fixed-point oracles.
//! - [`schedules`]: the parameter sequences `(α_n, β_n, γ_n)` and the
//!   convergence-condition validators.
//! - [`iteration`]: the modified Mann step and run loop, the anchor path,
//!   per-step diagnostics, the τ-analyzer and the recursion harness.
#![cfg_attr(not(test), no_std)]
// `!(a < b)` is deliberate throughout: NaN has to fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod iteration;
pub mod linalg;
pub mod operators;
pub mod sampling;
pub mod schedules;
pub mod space;
pub mod tolerance;
pub mod vector;

pub use error::{Error, Result};
pub use operators::{AveragedMap, Certificate, FixedSet, Operator, OperatorKind};
pub use schedules::{ScheduleSet, Sequence, VerdictReport};
pub use space::{NormKind, Space};
pub use tolerance::Tolerances;
pub use vector::Vector;
