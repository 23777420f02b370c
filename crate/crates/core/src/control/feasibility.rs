//! Existence and steering inequalities evaluated on concrete data.

use serde::{Deserialize, Serialize};

use super::nonlinearity::Nonlinearity;
use crate::error::{Error, Result};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityInput {
    /// `N = sup ||G(t)||`
    pub n_bound: f64,
    /// `M_B = ||B||`
    pub m_b: f64,
    pub horizon: f64,
    pub zeta_norm: f64,
    pub zeta1_norm: f64,
    /// `||u||` in `L^2(0, T)`
    pub control_norm: f64,
    pub l_tilde: f64,
    pub nonlinearity: Nonlinearity,
    pub p: f64,
}

/// `||gamma_r||_{L^1} = intercept + slope r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaL1 {
    pub intercept: f64,
    pub slope: f64,
}

impl GammaL1 {
    fn of(f: &Nonlinearity, horizon: f64, p: f64) -> Self {
        match f {
            Nonlinearity::ExpDecayLinear { .. } => GammaL1 { intercept: 0.0, slope: f.envelope_l1(horizon, 1.0, p) },
            _ => GammaL1 { intercept: f.envelope_l1(horizon, 0.0, p), slope: 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub mu: f64,
    /// `mu (1 - e^{-mu T})(1 + 2L) pi`, the commonly quoted value of `(1 + 2L) ||gamma_r||_{L^1} / r`.
    pub growth_integral_stated: f64,
    /// `(1 + 2L) pi (1 - e^{-mu T}) / mu`, the integral itself per unit `r`.
    pub growth_integral_exact: f64,
    /// `growth_integral_stated / growth_integral_exact`, which equals `mu^2`.
    pub ratio: f64,
    /// `mu pi (1 - e^{-mu T}) (1 + 2L)`
    pub smallness_lhs: f64,
    pub smallness_holds: bool,
    /// Same inequality with the exact integral.
    pub smallness_exact_lhs: f64,
    pub smallness_exact_holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub gamma: GammaL1,
    /// Smallest radius satisfying the existence bound; `None` when infeasible.
    pub existence_radius: Option<f64>,
    /// Smallest radius satisfying the steering bound; `None` when infeasible.
    pub steering_radius: Option<f64>,
    /// Radius bound `2 (||zeta|| + 2L (||zeta1|| + ||zeta||))` (strict).
    pub decay_radius: f64,
    pub decay: Option<DecayProbe>,
}

/// Smallest `r >= 0` with `a + b r <= r`.
fn smallest_radius(a: f64, b: f64) -> Option<f64> {
    if a <= 0.0 {
        return Some(0.0);
    }
    (b < 1.0).then(|| a / (1.0 - b))
}

/// Evaluates the inequality of the decaying linear nonlinearity in both forms.
pub fn decay_probe(mu: f64, horizon: f64, l_tilde: f64) -> DecayProbe {
    let e = 1.0 - (-mu * horizon).exp();
    let factor = 1.0 + 2.0 * l_tilde;
    let growth_integral_stated = mu * e * factor * PI;
    let growth_integral_exact = e * factor * PI / mu;
    DecayProbe {
        mu,
        growth_integral_stated,
        growth_integral_exact,
        ratio: growth_integral_stated / growth_integral_exact,
        smallness_lhs: growth_integral_stated,
        smallness_holds: growth_integral_stated <= 0.5,
        smallness_exact_lhs: growth_integral_exact,
        smallness_exact_holds: growth_integral_exact <= 0.5,
    }
}

pub fn feasibility_check(input: &FeasibilityInput) -> Result<FeasibilityReport> {
    let i = input;
    let values = [i.n_bound, i.m_b, i.horizon, i.zeta_norm, i.zeta1_norm, i.control_norm, i.l_tilde];
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("feasibility inputs must be finite and nonnegative".into()));
    }
    let gamma = GammaL1::of(&i.nonlinearity, i.horizon, i.p);
    let n = i.n_bound;
    let existence_radius = smallest_radius(n * i.zeta_norm + n * i.m_b * i.horizon.sqrt() * i.control_norm + n * gamma.intercept, n * gamma.slope);
    let l2 = 2.0 * i.l_tilde;
    let steer_a = n * i.zeta_norm + n * gamma.intercept + l2 * (i.zeta1_norm + n * i.zeta_norm + n * gamma.intercept);
    let steer_b = n * gamma.slope * (1.0 + l2);
    let steering_radius = smallest_radius(steer_a, steer_b);
    let decay_radius = 2.0 * (i.zeta_norm + l2 * (i.zeta1_norm + i.zeta_norm));
    let decay = match i.nonlinearity {
        Nonlinearity::ExpDecayLinear { mu } => Some(decay_probe(mu, i.horizon, i.l_tilde)),
        _ => None,
    };
    Ok(FeasibilityReport { gamma, existence_radius, steering_radius, decay_radius, decay })
}
