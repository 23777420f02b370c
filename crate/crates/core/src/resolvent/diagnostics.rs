//! Consistency checks on resolvent tables: the resolvent integral equation
//! `s(t) = 1 - lam int_0^t (1 + M0(t - s)) s(s) ds` and the reported decay bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{scalar_resolvent_contour_with, TalbotOptions};
use super::table::ResolventTable;
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::spectral::SpectralSystem;
use crate::volterra::weights::{linear_row, quadratic_row, ResolventEquationKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadRule {
    /// Product integration on the piecewise-linear interpolant (all nodes).
    ProductTrapezoid,
    /// Product integration on the piecewise-quadratic interpolant (even nodes).
    ProductSimpson,
}

/// Max over table times of `|s(t_k) - RHS(t_k)|` for mode index `m` (0-based).
pub fn verify_resolvent_equation(table: &ResolventTable, m: usize, rule: QuadRule) -> Result<f64> {
    if m >= table.modes() {
        return Err(Error::DimensionMismatch { expected: table.modes(), found: m + 1 });
    }
    let lam = table.eigenvalues[m];
    let s = &table.values[m];
    let nodes = &table.times;
    let kernel = ResolventEquationKernel(&table.kernel);
    let ks: Vec<usize> = match rule {
        QuadRule::ProductTrapezoid => (1..nodes.len()).collect(),
        QuadRule::ProductSimpson => (2..nodes.len()).step_by(2).collect(),
    };
    let residuals: Vec<f64> = ks
        .par_iter()
        .map(|&k| {
            let row = match rule {
                QuadRule::ProductTrapezoid => linear_row(&kernel, nodes, k)?,
                QuadRule::ProductSimpson => quadratic_row(&kernel, nodes, k)?,
            };
            let integral: f64 = row.iter().zip(s).map(|(w, v)| w * v).sum();
            Ok((s[k] - (1.0 - lam * integral)).abs())
        })
        .collect::<Result<_>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub m: usize,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeRow {
    pub m: usize,
    pub estimate: f64,
    pub target: f64,
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub bound_rows: Vec<DecayRow>,
    pub derivative_rows: Vec<DerivativeRow>,
}

/// Steps used for the one-sided derivative estimate at `0+`.
pub const DERIVATIVE_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Compares `s_m(t)^2` with `exp(-lam t (1 + alpha t^nu))` and estimates
/// `s_m'(0+)` (target `-lam`) by Richardson extrapolation of forward differences.
pub fn decay_diagnostics(table: &ResolventTable, kernel: &MemoryKernel, system: &SpectralSystem) -> Result<DecayReport> {
    let (alpha, nu) = (kernel.alpha(), kernel.nu());
    let modes = table.modes().min(system.modes());
    let mut bound_rows = Vec::new();
    for m in 0..modes {
        let lam = system.eigenvalues()[m];
        for (k, &t) in table.times.iter().enumerate() {
            let s = table.values[m][k];
            let lhs = s * s;
            let rhs = (-lam * t * (1.0 + alpha * t.powf(nu))).exp();
            bound_rows.push(DecayRow { m: m + 1, t, lhs, rhs, violation: lhs > rhs * (1.0 + 1e-6) });
        }
    }
    let opts = TalbotOptions { nodes: 32, shift: 0.0, branch_point: -kernel.beta() };
    let derivative_rows = (0..modes)
        .map(|m| {
            let lam = system.eigenvalues()[m];
            let d: Vec<f64> = DERIVATIVE_STEPS
                .iter()
                .map(|&h| Ok((scalar_resolvent_contour_with(kernel, lam, h, &opts)?.value - 1.0) / h))
                .collect::<Result<_>>()?;
            // D(h) = -lam + c1 h^nu + c2 h + ...: remove h^nu, then h
            let r = 2f64.powf(nu);
            let r1a = (r * d[1] - d[0]) / (r - 1.0);
            let r1b = (r * d[2] - d[1]) / (r - 1.0);
            let estimate = 2.0 * r1b - r1a;
            Ok(DerivativeRow { m: m + 1, estimate, target: -lam, relative_deviation: ((estimate + lam) / lam).abs() })
        })
        .collect::<Result<_>>()?;
    Ok(DecayReport { bound_rows, derivative_rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::table::{build_resolvent_table, TableRoute};

    fn table(kernel: &MemoryKernel, modes: usize, steps: usize) -> ResolventTable {
        let sys = SpectralSystem::new(modes, 33, 2.0).unwrap();
        let times: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
        build_resolvent_table(kernel, &sys, &times, TableRoute::Contour, 1e-15).unwrap()
    }

    #[test]
    fn exponential_case_residual_is_quadrature_error() {
        let k = MemoryKernel::new(1e-12, 0.5, 0.5).unwrap();
        let t = table(&k, 1, 128);
        let r = verify_resolvent_equation(&t, 0, QuadRule::ProductSimpson).unwrap();
        assert!(r <= 1e-6, "{r}");
        // trapezoid on e^{-s}: error about h^2/12 * (1 - e^{-1})
        let r = verify_resolvent_equation(&t, 0, QuadRule::ProductTrapezoid).unwrap();
        assert!(r > 1e-6 && r < 5e-6, "{r}");
    }

    #[test]
    fn residual_converges() {
        let k = MemoryKernel::new(1.0, 0.0, 0.5).unwrap();
        let res: Vec<f64> = [64, 128, 256].iter().map(|&n| verify_resolvent_equation(&table(&k, 1, n), 0, QuadRule::ProductSimpson).unwrap()).collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{res:?}");
        }
        let res: Vec<f64> = [64, 128, 256].iter().map(|&n| verify_resolvent_equation(&table(&k, 1, n), 0, QuadRule::ProductTrapezoid).unwrap()).collect();
        for w in res.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{res:?}");
        }
    }

    #[test]
    fn small_residual_for_acceptance_kernel() {
        let k = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let t = table(&k, 3, 128);
        for m in 0..3 {
            let r = verify_resolvent_equation(&t, m, QuadRule::ProductSimpson).unwrap();
            assert!(r <= 1e-4, "m = {m}: {r}");
        }
    }

    #[test]
    fn decay_report_rows() {
        let k = MemoryKernel::new(1.0, 0.0, 0.5).unwrap();
        let sys = SpectralSystem::new(2, 33, 2.0).unwrap();
        let t = table(&k, 2, 8);
        let rep = decay_diagnostics(&t, &k, &sys).unwrap();
        assert_eq!(rep.bound_rows.len(), 18);
        let first = &rep.bound_rows[0];
        assert_eq!((first.lhs, first.rhs, first.violation), (1.0, 1.0, false));
        let half = rep.bound_rows.iter().find(|r| r.m == 1 && r.t == 0.5).unwrap();
        assert!(!half.violation);
        let d1 = &rep.derivative_rows[0];
        assert!(d1.relative_deviation < 0.05, "{d1:?}");
    }
}
