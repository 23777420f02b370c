//! Numerical toolkit for heat equations with a weakly singular memory term
//! `w' = -A w - A (kappa * w) + B u + f(t, w)` with
//! `kappa(t) = alpha e^{-beta t} t^{nu-1} / Gamma(nu)`.
//!
//! The crate evaluates the scalar resolvent functions of the memory equation by
//! three independent routes (a Prabhakar-function series, Laplace inversion on a
//! Talbot contour, and product-integration time stepping), assembles
//! controllability Gramians on a truncated sine basis and synthesizes
//! regularized steering controls for linear and semilinear dynamics.

pub mod control;
pub mod error;
pub mod kernel;
pub mod resolvent;
pub mod special;
pub mod spectral;
pub mod volterra;

pub use error::{Error, Result};
pub use kernel::MemoryKernel;
pub use spectral::SpectralSystem;

/// Crate version, recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
