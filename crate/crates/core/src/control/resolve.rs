//! Regularized resolvent `z = (lambda I + Upsilon J)^{-1} y`.

use nalgebra::DVector;

use super::duality::duality_map_spectral;
use super::gramian::Gramian;
use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

pub const RESOLVE_TOL: f64 = 1e-10;
pub const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;
const BOUND_SLACK: f64 = 1e-12;

/// Solves `lambda z + Upsilon J[z] = y`; the bound `||lambda z|| <= ||y||` is
/// checked in the configured norm before returning.
pub fn regularized_resolvent(gramian: &Gramian, lambda: f64, y: &DVector<f64>, system: &SpectralSystem) -> Result<DVector<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("regularization must be positive (got {lambda})")));
    }
    if y.len() != gramian.dim() || y.len() != system.modes() {
        return Err(Error::DimensionMismatch { expected: gramian.dim(), found: y.len() });
    }
    let z = if system.p() == 2.0 { linear_solve(gramian, lambda, y)? } else { fixed_point(gramian, lambda, y, system)? };
    let lhs = lambda * system.state_norm(&z)?;
    let rhs = system.state_norm(y)?;
    if lhs > rhs * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE {
        return Err(Error::BoundViolated { what: "resolvent bound".into(), lhs, rhs });
    }
    Ok(z)
}

fn linear_solve(gramian: &Gramian, lambda: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
    let n = y.len();
    let a = &gramian.matrix + nalgebra::DMatrix::identity(n, n) * lambda;
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(y));
    }
    a.lu().solve(y).ok_or_else(|| Error::InvalidArgument("regularized Gramian is singular".into()))
}

fn fixed_point(gramian: &Gramian, lambda: f64, y: &DVector<f64>, system: &SpectralSystem) -> Result<DVector<f64>> {
    let omega = 1.0 / (lambda + gramian.norm());
    let tol = RESOLVE_TOL * (1.0 + y.norm());
    let residual_of = |z: &DVector<f64>| -> Result<DVector<f64>> { Ok(y - z * lambda - &gramian.matrix * duality_map_spectral(z, system)?) };
    let mut z = y / (lambda + gramian.norm());
    let mut r = residual_of(&z)?;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        if r.norm() <= tol {
            return Ok(z);
        }
        z += &r * omega;
        r = residual_of(&z)?;
        if !r.norm().is_finite() {
            break;
        }
    }
    if r.norm() <= tol {
        return Ok(z);
    }
    Err(Error::FixedPointDiverged { residual: r.norm() })
}
