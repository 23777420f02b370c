//! Implicit product-trapezoid stepping for one mode of the linear equation
//! `w' = -lam w - lam (kappa * w) + g`, `w(0) = w0`.
//!
//! The scheme integrates the equation over each step, so the memory term
//! enters as the increment of `Phi(t) = int_0^t M0(t - s) w(s) ds` with
//! `M0 = 1 * kappa`:
//!
//! `w_k - w_{k-1} = -lam h (w_k + w_{k-1}) / 2 - lam (Phi_k - Phi_{k-1}) + h (g_k + g_{k-1}) / 2`,
//!
//! where `Phi_k` uses product weights for the continuous kernel `M0` on the
//! piecewise-linear interpolant of w, including the implicit endpoint.
//!
//! The scheme is second order. It stays bounded when `lam h` is of order one
//! or smaller; for much larger steps the memory weights can amplify.

use super::grid::TimeGrid;
use super::weights::{ConvWeights, KappaIntegral};
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;

/// Precomputed weights for stepping any number of modes on one grid.
#[derive(Debug, Clone)]
pub struct LinearStepper {
    grid: TimeGrid,
    weights: ConvWeights,
}

impl LinearStepper {
    pub fn new(kernel: &MemoryKernel, grid: &TimeGrid) -> Result<Self> {
        Ok(Self { grid: grid.clone(), weights: ConvWeights::build(&KappaIntegral(kernel), grid)? })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Increment weight `W[k][j] - W[k-1][j]`.
    fn increment(&self, k: usize, j: usize) -> f64 {
        let prev = if j < k { self.weights.weight(k - 1, j) } else { 0.0 };
        self.weights.weight(k, j) - prev
    }

    /// Solves the mode equation with eigenvalue `lam`; `forcing[k] = g(t_k)`.
    pub fn solve(&self, lam: f64, w0: f64, forcing: &[f64]) -> Result<Vec<f64>> {
        let kmax = self.grid.steps();
        if forcing.len() != kmax + 1 {
            return Err(Error::DimensionMismatch { expected: kmax + 1, found: forcing.len() });
        }
        if !(lam > 0.0) {
            return Err(Error::InvalidArgument(format!("mode eigenvalue must be positive (got {lam})")));
        }
        let mut w = vec![0.0; kmax + 1];
        w[0] = w0;
        for k in 1..=kmax {
            let h = self.grid.step(k);
            let coefficient = 1.0 + 0.5 * lam * h + lam * self.increment(k, k);
            if !(coefficient > 0.0) {
                return Err(Error::StepSingular { step: k, coefficient });
            }
            let mut memory = 0.0;
            for (j, wj) in w.iter().enumerate().take(k) {
                memory += self.increment(k, j) * wj;
            }
            let rhs = w[k - 1] * (1.0 - 0.5 * lam * h) - lam * memory + 0.5 * h * (forcing[k] + forcing[k - 1]);
            w[k] = rhs / coefficient;
        }
        Ok(w)
    }
}

/// One-shot convenience wrapper around [`LinearStepper`].
pub fn step_linear_mode(kernel: &MemoryKernel, lam: f64, grid: &TimeGrid, w0: f64, forcing: &[f64]) -> Result<Vec<f64>> {
    LinearStepper::new(kernel, grid)?.solve(lam, w0, forcing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_stays_zero() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let w = step_linear_mode(&k, 4.0, &g, 0.0, &[0.0; 33]).unwrap();
        assert!(w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_limit_second_order() {
        let k = MemoryKernel::new(1e-12, 0.5, 0.5).unwrap();
        let mut errs = vec![];
        for n in [256, 512, 1024] {
            let g = TimeGrid::uniform(1.0, n).unwrap();
            let w = step_linear_mode(&k, 1.0, &g, 1.0, &vec![0.0; n + 1]).unwrap();
            errs.push((w[n] - (-1.0_f64).exp()).abs());
        }
        for e in errs.windows(2) {
            assert!((e[0] / e[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn matches_series_reference() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let g = TimeGrid::uniform(1.0, 2048).unwrap();
        let w = step_linear_mode(&k, 1.0, &g, 1.0, &vec![0.0; 2049]).unwrap();
        assert!((w[1024] - 0.449_630_361_164_067).abs() < 1e-4);
        assert!((w[2048] - 0.122_492_289_156_637).abs() < 1e-4);
    }

    #[test]
    fn graded_grid_converges() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let g = TimeGrid::new(1.0, 512, crate::volterra::grid::GridKind::Graded { exponent: 2.0 }).unwrap();
        let w = step_linear_mode(&k, 4.0, &g, 1.0, &vec![0.0; 513]).unwrap();
        assert!((w[512] + 0.042_810_802_543_035_2).abs() < 1e-4);
    }

    #[test]
    fn decay_is_not_monotone() {
        // the exact mode-2 resolvent oscillates: |s_2(0.5)| < |s_2(1)|
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let g = TimeGrid::uniform(1.0, 512).unwrap();
        let w = step_linear_mode(&k, 4.0, &g, 1.0, &vec![0.0; 513]).unwrap();
        assert!(w[256].abs() < w[512].abs());
    }

    #[test]
    fn huge_steps_lose_boundedness() {
        // the step amplification tends to -A_0/B_0 as lam h grows, and the
        // integrated kernel weights the older node more heavily
        let k = MemoryKernel::new(3.58, 0.0, 0.25).unwrap();
        let g = TimeGrid::uniform(3.85, 2).unwrap();
        let w = step_linear_mode(&k, 36.0, &g, 1.0, &[0.0; 3]).unwrap();
        assert!(w[1].abs() > 1.0);
        let g = TimeGrid::uniform(3.85, 256).unwrap();
        let w = step_linear_mode(&k, 36.0, &g, 1.0, &[0.0; 257]).unwrap();
        assert!(w.iter().all(|v| v.abs() <= 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn stays_bounded_by_initial_value(
            alpha in 0.01f64..5.0, beta in 0.0f64..2.0, nu in 0.05f64..0.95,
            m in 1usize..9, extra in 0usize..200, t in 0.1f64..4.0,
        ) {
            // steps with lam h <= 1
            let n = ((m * m) as f64 * t).ceil() as usize + 2 + extra;
            let k = MemoryKernel::new(alpha, beta, nu).unwrap();
            let g = TimeGrid::uniform(t, n).unwrap();
            let w = step_linear_mode(&k, (m * m) as f64, &g, 1.0, &vec![0.0; n + 1]).unwrap();
            prop_assert!(w.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        }
    }
}
