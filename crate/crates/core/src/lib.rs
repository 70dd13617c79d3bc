//! Density, distribution function and characteristic function of the
//! powered sum `X = Σ_{i=1}^n X_i^d` of i.i.d. standard normal variables,
//! `d ≥ 3`, computed by inverting the characteristic function along rotated
//! contours.
//!
//! The crate is layered bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss-Kronrod integration along rays and segments.
//! - [`contour_cf`]: the rotated characteristic function `φ_θ(w)` and its
//!   convergence regions.
//! - [`density`]: the rotated density integral `ψ(z; θ, θ', φ)`, the density
//!   `f_X(x)` and the distribution function `F(c)`.
//! - [`oracles`]: closed-form, convolution, brute-force and Monte Carlo
//!   references that never touch the contour machinery.

// `!(a < b)` is used on purpose so that NaN fails the test
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour_cf;
pub mod density;
pub mod error;
pub mod oracles;
pub mod quadrature;

pub use contour_cf::{PhiCache, PowerSumModel};
pub use density::{ContourTriple, DensityEngine, DensityResult, EpsilonPolicy, FormulaVariant};

pub use error::{Error, Result};
pub use quadrature::{ComplexValue, QuadConfig, QuadResult, Ray};
