//! Nonlinear forcing terms `f(t, w)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::SpectralSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Zero,
    /// `k0 cos(2 pi t / T) sin(w(xi))`, applied pointwise in space.
    SineCosine { k0: f64, horizon: f64 },
    /// `e^{-mu t} w`.
    ExpDecayLinear { mu: f64 },
}

const PI: f64 = std::f64::consts::PI;

impl Nonlinearity {
    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    /// Pointwise values on the physical grid.
    pub fn eval_grid(&self, t: f64, w: &DVector<f64>) -> DVector<f64> {
        match *self {
            Nonlinearity::Zero => DVector::zeros(w.len()),
            Nonlinearity::SineCosine { k0, horizon } => {
                let c = k0 * (2.0 * PI * t / horizon).cos();
                w.map(|v| c * v.sin())
            }
            Nonlinearity::ExpDecayLinear { mu } => w * (-mu * t).exp(),
        }
    }

    /// Spectral coefficients of `f(t, w)` on the truncated basis.
    pub fn eval(&self, t: f64, coeffs: &DVector<f64>, system: &SpectralSystem) -> Result<DVector<f64>> {
        match *self {
            Nonlinearity::Zero => Ok(DVector::zeros(coeffs.len())),
            Nonlinearity::ExpDecayLinear { mu } => Ok(coeffs * (-mu * t).exp()),
            Nonlinearity::SineCosine { .. } => {
                let grid = system.to_grid(coeffs)?;
                system.to_spectral(&self.eval_grid(t, &grid))
            }
        }
    }

    /// Pointwise-in-time bound on `||f(t, w)||_p` for `||w||_p <= r`.
    pub fn envelope(&self, t: f64, r: f64, p: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::SineCosine { k0, horizon } => k0 * PI.powf(1.0 / p) * (2.0 * PI * t / horizon).cos().abs(),
            Nonlinearity::ExpDecayLinear { mu } => (-mu * t).exp() * r * PI,
        }
    }

    /// `int_0^T envelope(t) dt` in closed form.
    pub fn envelope_l1(&self, horizon: f64, r: f64, p: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::SineCosine { k0, horizon: period } => {
                // int_0^T |cos(2 pi t / P)| dt; equals 2T/pi when T = P
                let full = (horizon / (period / 2.0)).floor();
                let rem = horizon - full * period / 2.0;
                let partial = abs_cos_integral(rem, period);
                k0 * PI.powf(1.0 / p) * (full * period / PI + partial)
            }
            Nonlinearity::ExpDecayLinear { mu } => r * PI * (1.0 - (-mu * horizon).exp()) / mu,
        }
    }
}

/// `int_0^x |cos(2 pi t / P)| dt` for `0 <= x <= P/2`.
fn abs_cos_integral(x: f64, period: f64) -> f64 {
    let w = 2.0 * PI / period;
    let quarter = period / 4.0;
    if x <= quarter {
        (w * x).sin() / w
    } else {
        2.0 / w - (w * x).sin() / w
    }
}
