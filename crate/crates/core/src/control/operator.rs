//! The control operator `B` in sine coordinates, `B_mn = <B phi_n, phi_m>`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlOperatorKind {
    Identity,
    /// `G(z, x) = x (pi - z)` for `z <= x`, `(pi - x) z` otherwise.
    ReflectedGreens,
    /// Scaled Dirichlet Green's function `min(z, x) (pi - max(z, x))`.
    GreensDiagonal,
    /// Any other matrix, e.g. an identity with modes removed.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOperator {
    pub kind: ControlOperatorKind,
    pub matrix: DMatrix<f64>,
    /// Largest singular value.
    pub operator_norm: f64,
}

/// Refinement controls for the kernel quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuadrature {
    /// Stop when successive refinements change no entry by more than this.
    pub tol: f64,
    pub min_intervals: usize,
    pub max_intervals: usize,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        Self { tol: 1e-10, min_intervals: 64, max_intervals: 1 << 16 }
    }
}

/// Kernel split along the diagonal as `g(x) h(z)` on each triangle.
struct SeparableKernel {
    lower: (fn(f64) -> f64, fn(f64) -> f64),
    upper: (fn(f64) -> f64, fn(f64) -> f64),
}

const PI: f64 = std::f64::consts::PI;

fn reflected_greens() -> SeparableKernel {
    SeparableKernel { lower: (|x| x, |z| PI - z), upper: (|x| PI - x, |z| z) }
}

fn greens_kernel() -> SeparableKernel {
    SeparableKernel { lower: (|x| PI - x, |z| z), upper: (|x| x, |z| PI - z) }
}

/// Fourth-order integrals over each grid interval from equispaced samples.
fn interval_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    (1..=n)
        .map(|i| {
            let c = h / 24.0;
            if i == 1 {
                c * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
            } else if i == n {
                c * (f[n - 3] - 5.0 * f[n - 2] + 19.0 * f[n - 1] + 9.0 * f[n])
            } else {
                c * (-f[i - 2] + 13.0 * f[i - 1] + 13.0 * f[i] - f[i + 1])
            }
        })
        .collect()
}

fn kernel_matrix_at(kernel: &SeparableKernel, modes: usize, n: usize) -> DMatrix<f64> {
    let h = PI / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let c = (2.0 / PI).sqrt();
    let phi = |m: usize, x: f64| c * (m as f64 * x).sin();
    let simpson: Vec<f64> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * h / 3.0
        })
        .collect();
    let mut out = DMatrix::zeros(modes, modes);
    for col in 0..modes {
        let lower: Vec<f64> = xs.iter().map(|&z| (kernel.lower.1)(z) * phi(col + 1, z)).collect();
        let upper: Vec<f64> = xs.iter().map(|&z| (kernel.upper.1)(z) * phi(col + 1, z)).collect();
        let il = interval_integrals(&lower, h);
        let iu = interval_integrals(&upper, h);
        let total_upper: f64 = iu.iter().sum();
        let mut cum_lower = 0.0;
        let mut cum_upper = 0.0;
        let mut inner = vec![0.0; n + 1];
        for i in 0..=n {
            if i > 0 {
                cum_lower += il[i - 1];
                cum_upper += iu[i - 1];
            }
            let x = xs[i];
            inner[i] = (kernel.lower.0)(x) * cum_lower + (kernel.upper.0)(x) * (total_upper - cum_upper);
        }
        for row in 0..modes {
            out[(row, col)] = (0..=n).map(|i| simpson[i] * phi(row + 1, xs[i]) * inner[i]).sum();
        }
    }
    out
}

fn refine(kernel: &SeparableKernel, modes: usize, quad: &KernelQuadrature) -> Result<DMatrix<f64>> {
    let mut n = quad.min_intervals.max(8).next_power_of_two();
    let mut prev = kernel_matrix_at(kernel, modes, n);
    let mut change = f64::INFINITY;
    while n < quad.max_intervals {
        n *= 2;
        let next = kernel_matrix_at(kernel, modes, n);
        change = (&next - &prev).amax();
        prev = next;
        if change <= quad.tol {
            return Ok(prev);
        }
    }
    Err(Error::QuadratureNotConverged { change })
}

fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

impl ControlOperator {
    pub fn identity(modes: usize) -> Self {
        Self { kind: ControlOperatorKind::Identity, matrix: DMatrix::identity(modes, modes), operator_norm: 1.0 }
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let operator_norm = largest_singular_value(&matrix);
        if !(operator_norm > 0.0) {
            return Err(Error::InvalidArgument("control operator must not vanish".into()));
        }
        Ok(Self { kind: ControlOperatorKind::Custom, matrix, operator_norm })
    }

    /// Copy with row and column of each listed mode (1-based) set to zero.
    pub fn with_zeroed_modes(&self, modes: &[usize]) -> Result<Self> {
        let mut m = self.matrix.clone();
        for &mode in modes {
            if mode == 0 || mode > m.nrows() || mode > m.ncols() {
                return Err(Error::InvalidArgument(format!("mode {mode} out of range")));
            }
            m.row_mut(mode - 1).fill(0.0);
            m.column_mut(mode - 1).fill(0.0);
        }
        Self::from_matrix(m)
    }

    pub fn state_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.matrix.ncols()
    }
}

/// `B` for the requested kernel on the first M modes.
pub fn control_operator_matrix(kind: ControlOperatorKind, system: &SpectralSystem, quad: &KernelQuadrature) -> Result<ControlOperator> {
    let m = system.modes();
    let matrix = match kind {
        ControlOperatorKind::Identity => return Ok(ControlOperator::identity(m)),
        ControlOperatorKind::ReflectedGreens => refine(&reflected_greens(), m, quad)?,
        ControlOperatorKind::GreensDiagonal => refine(&greens_kernel(), m, quad)?,
        ControlOperatorKind::Custom => {
            return Err(Error::InvalidArgument("custom operators are built with ControlOperator::from_matrix".into()))
        }
    };
    let operator_norm = largest_singular_value(&matrix);
    Ok(ControlOperator { kind, matrix, operator_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(m: usize) -> SpectralSystem {
        SpectralSystem::new(m, 65, 2.0).unwrap()
    }

    #[test]
    fn identity_bypasses_quadrature() {
        let b = control_operator_matrix(ControlOperatorKind::Identity, &system(4), &KernelQuadrature::default()).unwrap();
        assert_eq!(b.matrix, DMatrix::identity(4, 4));
        assert_eq!(b.operator_norm, 1.0);
    }

    #[test]
    fn greens_kernel_is_diagonal() {
        let b = control_operator_matrix(ControlOperatorKind::GreensDiagonal, &system(4), &KernelQuadrature::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(b.matrix[(i, j)].abs() <= 1e-9);
                }
            }
            let scaled = ((i + 1) * (i + 1)) as f64 * b.matrix[(i, i)];
            assert!((scaled - PI).abs() <= 1e-8 * PI, "{scaled}");
        }
    }

    #[test]
    fn reflected_greens_closed_forms() {
        // symbolic integration of the separable kernel against the normalized sines
        let b = control_operator_matrix(ControlOperatorKind::ReflectedGreens, &system(4), &KernelQuadrature::default()).unwrap();
        let expected = [
            ((0, 0), 3.0 * PI),
            ((0, 1), 0.0),
            ((1, 1), -5.0 * PI / 4.0),
            ((0, 2), 4.0 * PI / 3.0),
            ((1, 2), 0.0),
            ((2, 2), PI / 3.0),
            ((1, 3), -PI / 2.0),
        ];
        for ((i, j), v) in expected {
            assert!((b.matrix[(i, j)] - v).abs() <= 1e-8, "B[{i}][{j}] = {} vs {v}", b.matrix[(i, j)]);
        }
        assert!((&b.matrix - b.matrix.transpose()).amax() <= 1e-9);
        assert!(b.operator_norm > 0.0);
    }

    #[test]
    fn zeroed_modes() {
        let b = ControlOperator::identity(4).with_zeroed_modes(&[2]).unwrap();
        assert_eq!(b.kind, ControlOperatorKind::Custom);
        assert_eq!(b.matrix[(1, 1)], 0.0);
        assert_eq!(b.operator_norm, 1.0);
        assert!(ControlOperator::identity(4).with_zeroed_modes(&[5]).is_err());
        assert!(ControlOperator::from_matrix(DMatrix::zeros(2, 2)).is_err());
    }
}
