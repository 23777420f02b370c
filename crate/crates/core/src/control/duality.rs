//! Duality mapping of `L^p(0, pi)` on the quadrature grid.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

/// Functions with a smaller `L^p` norm are treated as zero.
pub const ZERO_NORM: f64 = 1e-14;
const IDENTITY_TOL: f64 = 1e-8;

/// Relative defects of `<J w, w> = ||w||_p^2` and `||J w||_q = ||w||_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingDefects {
    pub pairing: f64,
    pub norm: f64,
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `J w = |w|^{p-2} w ||w||_p^{2-p}`; the identity for `p = 2`.
pub fn duality_map(w: &DVector<f64>, p: f64, system: &SpectralSystem) -> Result<DVector<f64>> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("duality exponent must lie in [2, inf) (got {p})")));
    }
    if w.len() != system.grid_points() {
        return Err(Error::DimensionMismatch { expected: system.grid_points(), found: w.len() });
    }
    if p == 2.0 {
        return Ok(w.clone());
    }
    let norm = system.lp_norm_grid(w, p);
    if norm < ZERO_NORM {
        return Err(Error::ZeroVector { norm });
    }
    let scale = norm.powf(2.0 - p);
    let j = w.map(|v| v.abs().powf(p - 2.0) * v * scale);
    let d = pairing_defects(w, &j, p, system);
    if d.pairing > IDENTITY_TOL || d.norm > IDENTITY_TOL {
        return Err(Error::BoundViolated { what: "duality pairing identity".into(), lhs: d.pairing.max(d.norm), rhs: IDENTITY_TOL });
    }
    Ok(j)
}

pub fn pairing_defects(w: &DVector<f64>, j: &DVector<f64>, p: f64, system: &SpectralSystem) -> PairingDefects {
    let n = system.lp_norm_grid(w, p);
    let pairing = (system.pairing_grid(j, w) - n * n).abs() / (n * n);
    let norm = (system.lp_norm_grid(j, conjugate_exponent(p)) - n).abs() / n;
    PairingDefects { pairing, norm }
}

/// Duality map of a state given by its coefficients, projected back onto the
/// modes. A vanishing state maps to zero.
pub fn duality_map_spectral(z: &DVector<f64>, system: &SpectralSystem) -> Result<DVector<f64>> {
    let p = system.p();
    if p == 2.0 {
        return Ok(z.clone());
    }
    match duality_map(&system.to_grid(z)?, p, system) {
        Ok(j) => system.to_spectral(&j),
        Err(Error::ZeroVector { .. }) => Ok(DVector::zeros(z.len())),
        Err(e) => Err(e),
    }
}
