//! Center manifold reduction and normal form realization for the delayed
//! oscillator
//!
//! ```text
//! x'' + b x' + a x - F(x, x') = alpha x(t - tau) + beta x'(t - tau) + G(x(t - tau), x'(t - tau))
//! ```
//!
//! near its non-semisimple triple-zero point. The crate computes the
//! parameter locus and linear data, reduces given nonlinearities `F`, `G` to
//! the three-dimensional normal form on the center manifold, and inverts that
//! reduction: from a target normal form it builds `F`, `G` that realize it.
//! Independent numerical checks (delay integration, Chebyshev collocation)
//! live in [`verify`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod format;
pub mod homological;
pub mod linear;
pub mod poly;
pub mod realize;
pub mod reduction;
pub mod verify;

mod ddouble;
mod upoly;

pub use error::{Error, Result};
pub use homological::{split, w_basis, Family, SplitResult, WBasis, WLabel};
pub use linear::{locus, psi_basis, BasisPair, CharReport, OscillatorParams};
pub use poly::{HomoPoly, Series, ThetaPoly, VecPoly3};
pub use realize::{realize, GDecomposition, Realization};
pub use reduction::{reduce, CMTable, FGSeries, NFSeries, ReductionTrace};
