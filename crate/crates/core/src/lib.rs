//! Maximum-of-density functional `M` for laws on ℝᵈ, ℤ and finite groups,
//! together with numerical certificates for Rogozin-type convolution
//! inequalities and their sharp constants.
//!
//! `M(μ) = sup μ(A)/α(A)` over sets of positive reference measure. For a
//! law with a density this is the essential supremum of the density, and
//! `N∞(X) = M(X)^{-2/d}` is the ∞-Rényi entropy power.
//!
//! Modules:
//!
//! - [`measures`]: discrete and grid densities, `M`, `N∞`, grid convolution.
//! - [`finite_groups`]: Cayley-table groups, convolution, extreme points of
//!   `{0 ≤ p ≤ m, Σp = 1}` and the extreme-point supremum.
//! - [`integer_line`]: exact integer convolution, discrete rearrangement and
//!   the Mattner–Roos bound.
//! - [`rearrangement`]: symmetric decreasing rearrangement and
//!   Brascamp–Lieb–Luttinger checks in one dimension.
//! - [`ball_fourier`]: characteristic functions of uniform balls, the
//!   `L^p` integral bound, slicing values and closed-form constants.
//! - [`projections`]: Kronecker lifts, projection frames, the kernel
//!   pushforward formula and the end-to-end projection verifier.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball_fourier;
pub mod error;
pub mod finite_groups;
pub mod integer_line;
pub mod measures;
pub mod projections;
mod quadrature;
pub mod rearrangement;

pub use error::{Error, Result};
pub use measures::{DiscreteDensity, GridDensity, MaxFunctional};
