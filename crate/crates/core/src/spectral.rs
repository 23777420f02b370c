//! Truncated sine basis of the Dirichlet Laplacian on `(0, pi)`:
//! `phi_m = sqrt(2/pi) sin(m xi)`, `lambda_m = m^2`.
//!
//! Grid functions live on `N_g` equispaced points including both ends and are
//! integrated with the trapezoid rule. On that grid the sine modes with
//! `m < N_g - 1` are exactly orthonormal (discrete sine transform of type I),
//! so the grid/spectral transforms round-trip to rounding error.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct SpectralSystem {
    modes: usize,
    eigenvalues: Vec<f64>,
    grid_points: usize,
    p_exponent: f64,
    grid: Vec<f64>,
    weights: DVector<f64>,
    /// `basis[(i, m)] = phi_{m+1}(xi_i)`
    basis: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    modes: usize,
    eigenvalues: Vec<f64>,
    domain_length: f64,
    grid_points: usize,
    p_exponent: f64,
}

impl TryFrom<RawSystem> for SpectralSystem {
    type Error = Error;
    fn try_from(r: RawSystem) -> Result<Self> {
        SpectralSystem::new(r.modes, r.grid_points, r.p_exponent)
    }
}

impl From<SpectralSystem> for RawSystem {
    fn from(s: SpectralSystem) -> Self {
        RawSystem {
            modes: s.modes,
            eigenvalues: s.eigenvalues,
            domain_length: std::f64::consts::PI,
            grid_points: s.grid_points,
            p_exponent: s.p_exponent,
        }
    }
}

pub const DEFAULT_GRID_POINTS: usize = 513;

impl SpectralSystem {
    pub fn new(modes: usize, grid_points: usize, p_exponent: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("modes must be at least 1".into()));
        }
        if grid_points < 2 || modes + 1 >= grid_points {
            return Err(Error::InvalidArgument(format!(
                "grid_points must exceed modes + 1 (modes={modes}, grid_points={grid_points})"
            )));
        }
        if !(p_exponent >= 2.0 && p_exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be finite and at least 2 (got {p_exponent})")));
        }
        let pi = std::f64::consts::PI;
        let n = grid_points;
        let h = pi / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let mut weights = DVector::from_element(n, h);
        weights[0] = 0.5 * h;
        weights[n - 1] = 0.5 * h;
        let c = (2.0 / pi).sqrt();
        let basis = DMatrix::from_fn(n, modes, |i, m| {
            if i == 0 || i == n - 1 {
                0.0
            } else {
                // argument reduced through the exact integer product (m+1) i
                let k = ((m + 1) * i) % (2 * (n - 1));
                c * (pi * k as f64 / (n - 1) as f64).sin()
            }
        });
        let eigenvalues = (1..=modes).map(|m| (m * m) as f64).collect();
        Ok(Self { modes, eigenvalues, grid_points, p_exponent, grid, weights, basis })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    pub fn p(&self) -> f64 {
        self.p_exponent
    }

    /// Copy with a different norm exponent.
    pub fn with_p(&self, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p must be finite and at least 2 (got {p})")));
        }
        let mut s = self.clone();
        s.p_exponent = p;
        Ok(s)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    fn check_len(&self, v: usize, expected: usize) -> Result<()> {
        if v != expected {
            return Err(Error::DimensionMismatch { expected, found: v });
        }
        Ok(())
    }

    /// Synthesis `sum_m c_m phi_m` on the grid.
    pub fn to_grid(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(coeffs.len(), self.modes)?;
        Ok(&self.basis * coeffs)
    }

    /// Trapezoid projection onto the first M modes.
    pub fn to_spectral(&self, values: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(values.len(), self.grid_points)?;
        Ok(self.basis.tr_mul(&values.component_mul(&self.weights)))
    }

    /// Trapezoid `L^p` norm of grid values.
    pub fn lp_norm_grid(&self, values: &DVector<f64>, p: f64) -> f64 {
        if p == 2.0 {
            return values.iter().zip(self.weights.iter()).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
        }
        values.iter().zip(self.weights.iter()).map(|(v, w)| w * v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    /// Trapezoid pairing `int a b`.
    pub fn pairing_grid(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.iter().zip(b.iter()).zip(self.weights.iter()).map(|((x, y), w)| w * x * y).sum()
    }

    /// `L^p` norm (configured p) of the function with the given coefficients.
    /// For p = 2 this is the Euclidean norm of the coefficients.
    pub fn state_norm(&self, coeffs: &DVector<f64>) -> Result<f64> {
        if self.p_exponent == 2.0 {
            self.check_len(coeffs.len(), self.modes)?;
            return Ok(coeffs.norm());
        }
        Ok(self.lp_norm_grid(&self.to_grid(coeffs)?, self.p_exponent))
    }
}
