//! The memory kernel `kappa(t) = alpha e^{-beta t} t^{nu-1} / Gamma(nu)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma, scaled_lower_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel", into = "RawKernel")]
pub struct MemoryKernel {
    alpha: f64,
    beta: f64,
    nu: f64,
    gamma_nu: f64,
}

#[derive(Serialize, Deserialize)]
struct RawKernel {
    alpha: f64,
    beta: f64,
    nu: f64,
}

impl TryFrom<RawKernel> for MemoryKernel {
    type Error = Error;
    fn try_from(r: RawKernel) -> Result<Self> {
        MemoryKernel::new(r.alpha, r.beta, r.nu)
    }
}

impl From<MemoryKernel> for RawKernel {
    fn from(k: MemoryKernel) -> Self {
        RawKernel { alpha: k.alpha, beta: k.beta, nu: k.nu }
    }
}

impl MemoryKernel {
    pub fn new(alpha: f64, beta: f64, nu: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive and finite (got {alpha})")));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be nonnegative and finite (got {beta})")));
        }
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::InvalidArgument(format!("nu must lie in (0,1) (got {nu})")));
        }
        Ok(Self { alpha, beta, nu, gamma_nu: gamma(nu)? })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `kappa(t)` for t > 0.
    pub fn value(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0);
        self.alpha * (-self.beta * t).exp() * t.powf(self.nu - 1.0) / self.gamma_nu
    }

    /// `int_0^u v^p kappa(v) dv` for integer p >= 0.
    pub fn moment(&self, p: u32, u: f64) -> Result<f64> {
        let s = self.nu + p as f64;
        Ok(self.alpha / self.gamma_nu * scaled_lower_gamma(s, self.beta, u)?)
    }

    /// `(1 * kappa)(u) = int_0^u kappa`.
    pub fn integrated(&self, u: f64) -> Result<f64> {
        self.moment(0, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_enforces_ranges() {
        assert!(MemoryKernel::new(0.0, 0.5, 0.5).is_err());
        assert!(MemoryKernel::new(1.0, -0.1, 0.5).is_err());
        assert!(MemoryKernel::new(1.0, 0.5, 1.0).is_err());
        assert!(MemoryKernel::new(1.0, 0.5, 0.0).is_err());
        assert!(MemoryKernel::new(1e-300, 0.0, 0.5).is_ok());
    }

    #[test]
    fn value_and_moments() {
        let k = MemoryKernel::new(2.0, 0.0, 0.5).unwrap();
        let pi = std::f64::consts::PI;
        assert!((k.value(0.25) - 2.0 * 2.0 / pi.sqrt()).abs() < 1e-14);
        // beta = 0: alpha u^nu / Gamma(nu + 1)
        let m0 = k.integrated(0.7).unwrap();
        assert!((m0 - 2.0 * 0.7_f64.sqrt() / gamma(1.5).unwrap()).abs() < 1e-14);
        // beta > 0 against mpmath quad of v e^{-v/2} v^{-1/2} / Gamma(1/2) on [0, 1.3]
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let m1 = k.moment(1, 1.3).unwrap();
        assert!((m1 - 0.383_063_677_135_479_677_7).abs() < 1e-13, "{m1}");
    }

    #[test]
    fn serde_roundtrip_validates() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert_eq!(s, r#"{"alpha":1.0,"beta":0.5,"nu":0.5}"#);
        let back: MemoryKernel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, k);
        assert!(serde_json::from_str::<MemoryKernel>(r#"{"alpha":1.0,"beta":0.5,"nu":1.5}"#).is_err());
    }
}
