//! Finite-dimensional controllability criteria.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gramian::{assemble_gramian_at, mixed_gramian, Gramian};
use super::operator::ControlOperator;
use super::resolve::regularized_resolvent;
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;
use crate::spectral::SpectralSystem;
use crate::volterra::mild::LagIndex;
use crate::volterra::TimeGrid;

pub const CRITERION_THRESHOLD: f64 = 1e-3;
pub const MONOTONE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionVerdict {
    Controllable,
    NotControllable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionTable {
    /// `(lambda, max_y ||lambda R(lambda) y|| / ||y||)`
    pub rows: Vec<(f64, f64)>,
    pub verdict: CriterionVerdict,
}

impl CriterionTable {
    /// CSV with header `lambda,crit`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,crit\n");
        for (l, c) in &self.rows {
            out.push_str(&format!("{l:.16e},{c:.16e}\n"));
        }
        out
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].1 <= w[0].1 + MONOTONE_SLACK)
    }
}

/// Sweep of `||lambda R(lambda, Upsilon) y|| / ||y||` over a decreasing
/// sequence of regularizations; zero samples contribute 0.
pub fn approx_criterion(gramian: &Gramian, lambdas: &[f64], samples: &[DVector<f64>], system: &SpectralSystem) -> Result<CriterionTable> {
    if lambdas.is_empty() || !lambdas.iter().all(|&l| l > 0.0) || !lambdas.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("lambda sequence must be positive and strictly decreasing".into()));
    }
    let rows = lambdas
        .iter()
        .map(|&l| {
            let mut worst = 0.0_f64;
            for y in samples {
                let ny = system.state_norm(y)?;
                if ny == 0.0 {
                    continue;
                }
                let z = regularized_resolvent(gramian, l, y, system)?;
                worst = worst.max(l * system.state_norm(&z)? / ny);
            }
            Ok((l, worst))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = CriterionTable { rows, verdict: CriterionVerdict::NotControllable };
    let last = table.rows.last().map_or(f64::INFINITY, |r| r.1);
    if last <= CRITERION_THRESHOLD && table.is_nonincreasing() {
        table.verdict = CriterionVerdict::Controllable;
    }
    Ok(table)
}

/// Criterion evaluated with the Gramian of each horizon `t_k` in `horizons` (node indices).
pub fn approx_criterion_horizons(
    table: &ResolventTable,
    b: &ControlOperator,
    grid: &TimeGrid,
    horizons: &[usize],
    lambdas: &[f64],
    samples: &[DVector<f64>],
    system: &SpectralSystem,
) -> Result<Vec<(f64, CriterionTable)>> {
    horizons
        .iter()
        .map(|&k| {
            let g = assemble_gramian_at(table, b, grid, k)?;
            Ok((grid.nodes()[k], approx_criterion(&g, lambdas, samples, system)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjointVerdict {
    Vanishes,
    NonVanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointReport {
    pub verdict: AdjointVerdict,
    /// `max_t ||B^T G(T-t)^T w||`
    pub max_norm: f64,
    /// `int ||B^T G(T-t)^T w||^2 dt` (trapezoid), equal to `<w, Upsilon w>`.
    pub quadratic_form: f64,
    /// `w` itself vanishes, so the verdict carries no information.
    pub degenerate: bool,
}

pub fn adjoint_vanishing_test(table: &ResolventTable, b: &ControlOperator, w_star: &DVector<f64>, grid: &TimeGrid, tol: f64) -> Result<AdjointReport> {
    if w_star.len() != table.modes() || b.state_dim() != table.modes() {
        return Err(Error::DimensionMismatch { expected: table.modes(), found: w_star.len() });
    }
    let lags = LagIndex::new(table, grid)?;
    let end = grid.steps();
    let tau = grid.trapezoid_weights(end);
    let mut max_norm = 0.0_f64;
    let mut quadratic_form = 0.0;
    for j in 0..=end {
        let idx = lags.get(end, j);
        let v = DVector::from_fn(w_star.len(), |m, _| table.values[m][idx] * w_star[m]);
        let n = b.matrix.tr_mul(&v).norm();
        max_norm = max_norm.max(n);
        quadratic_form += tau[j] * n * n;
    }
    let scale = w_star.norm();
    let verdict = if max_norm <= tol * scale { AdjointVerdict::Vanishes } else { AdjointVerdict::NonVanishing };
    Ok(AdjointReport { verdict, max_norm, quadratic_form, degenerate: scale == 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub controllable: bool,
    pub singular_values: Vec<f64>,
}

pub const RANK_THRESHOLD: f64 = 1e-10;

/// Kalman rank of `A = diag(-eigenvalues)` and `B`. The powers `A^k` are
/// replaced by Chebyshev polynomials `T_k(A')` of the spectrum mapped to
/// `[-1, 1]`; both families span the same polynomials of degree < M, so the
/// rank is unchanged while the block columns stay O(1).
pub fn rank_condition(eigenvalues: &[f64], b: &DMatrix<f64>) -> Result<RankReport> {
    let m = eigenvalues.len();
    if m == 0 || b.nrows() != m {
        return Err(Error::DimensionMismatch { expected: m, found: b.nrows() });
    }
    let a: Vec<f64> = eigenvalues.iter().map(|l| -l).collect();
    let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mapped: Vec<f64> = a.iter().map(|x| if half > 0.0 { (x - center) / half } else { 0.0 }).collect();
    let cols = b.ncols();
    let mut kalman = DMatrix::zeros(m, m * cols);
    let mut prev = DMatrix::zeros(m, cols);
    let mut cur = b.clone();
    for k in 0..m {
        kalman.columns_mut(k * cols, cols).copy_from(&cur);
        let mut next = DMatrix::from_fn(m, cols, |i, j| mapped[i] * cur[(i, j)]);
        if k > 0 {
            next = next * 2.0 - &prev;
        }
        prev = cur;
        cur = next;
    }
    let sv = kalman.svd(false, false).singular_values;
    let mut singular_values: Vec<f64> = sv.iter().copied().collect();
    singular_values.sort_by(|x, y| y.total_cmp(x));
    let top = singular_values.first().copied().unwrap_or(0.0);
    let rank = if top == 0.0 { 0 } else { singular_values.iter().filter(|&&s| s > RANK_THRESHOLD * top).count() };
    Ok(RankReport { rank, controllable: rank == m, singular_values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianGrowth {
    /// `max_k ||F(t_k) F(T)^{-1}||_2`
    pub l_tilde: f64,
    /// `||F(t_k) F(T)^{-1}||_2` at each node.
    pub norms: Vec<f64>,
    /// `max |F(T) - Upsilon|`
    pub terminal_mismatch: f64,
}

/// Measures the constant of the uniform bound on `F(t) F(T)^{-1}`.
pub fn gramian_growth_check(table: &ResolventTable, b: &ControlOperator, grid: &TimeGrid, gramian: &Gramian) -> Result<GramianGrowth> {
    if gramian.min_eigenvalue <= 1e-12 {
        return Err(Error::NotApplicable(format!("Gramian is singular on the truncated space (min eigenvalue {:e})", gramian.min_eigenvalue)));
    }
    let lags = LagIndex::new(table, grid)?;
    let end = grid.steps();
    let bbt = &b.matrix * b.matrix.transpose();
    let f_end = mixed_gramian(table, &bbt, &lags, grid, end, end);
    let terminal_mismatch = (&f_end - &gramian.matrix).amax();
    if terminal_mismatch > 1e-10 {
        return Err(Error::BoundViolated { what: "F(T) = Gramian".into(), lhs: terminal_mismatch, rhs: 1e-10 });
    }
    let inv = gramian.matrix.clone().cholesky().ok_or_else(|| Error::NotApplicable("Gramian is not positive definite".into()))?.inverse();
    let norms: Vec<f64> = (1..=end)
        .map(|k| {
            let f = mixed_gramian(table, &bbt, &lags, grid, k, end);
            (f * &inv).svd(false, false).singular_values.max()
        })
        .collect();
    let l_tilde = norms.iter().copied().fold(0.0, f64::max);
    if l_tilde < 1.0 - 1e-10 {
        return Err(Error::BoundViolated { what: "L_tilde >= 1".into(), lhs: 1.0 - l_tilde, rhs: 1e-10 });
    }
    Ok(GramianGrowth { l_tilde, norms, terminal_mismatch })
}
