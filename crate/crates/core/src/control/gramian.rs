//! Controllability Gramian `int_0^T G(T-t) B B^T G(T-t)^T dt` on the truncated space.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::operator::ControlOperator;
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;
use crate::volterra::mild::LagIndex;
use crate::volterra::TimeGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gramian {
    pub matrix: DMatrix<f64>,
    pub horizon: f64,
    pub min_eigenvalue: f64,
    pub quadrature_steps: usize,
}

impl Gramian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral norm (largest eigenvalue).
    pub fn norm(&self) -> f64 {
        SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

fn check_dims(table: &ResolventTable, b: &ControlOperator) -> Result<()> {
    if b.state_dim() != table.modes() {
        return Err(Error::DimensionMismatch { expected: table.modes(), found: b.state_dim() });
    }
    Ok(())
}

/// `F(t_k) = sum_j tau_j G(t_k - t_j) B B^T G(T - t_j)`, so that `F(T)` is the Gramian.
pub(crate) fn mixed_gramian(table: &ResolventTable, bbt: &DMatrix<f64>, lags: &LagIndex, grid: &TimeGrid, k: usize, end: usize) -> DMatrix<f64> {
    let tau = grid.trapezoid_weights(k);
    let n = bbt.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for (j, w) in tau.iter().enumerate() {
        let left = lags.get(k, j);
        let right = lags.get(end, j);
        for c in 0..n {
            let sc = table.values[c][right];
            for r in 0..n {
                acc[(r, c)] += w * table.values[r][left] * bbt[(r, c)] * sc;
            }
        }
    }
    acc
}

fn finish(matrix: DMatrix<f64>, horizon: f64, steps: usize) -> Gramian {
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let min_eigenvalue = SymmetricEigen::new(sym.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    Gramian { matrix: sym, horizon, min_eigenvalue, quadrature_steps: steps }
}

/// Trapezoid Gramian over the whole grid.
pub fn assemble_gramian(table: &ResolventTable, b: &ControlOperator, grid: &TimeGrid) -> Result<Gramian> {
    assemble_gramian_at(table, b, grid, grid.steps())
}

/// Gramian over `[0, t_k]`.
pub fn assemble_gramian_at(table: &ResolventTable, b: &ControlOperator, grid: &TimeGrid, k: usize) -> Result<Gramian> {
    check_dims(table, b)?;
    if k == 0 || k > grid.steps() {
        return Err(Error::InvalidArgument(format!("horizon index {k} out of range")));
    }
    let lags = LagIndex::new(table, grid)?;
    let bbt = &b.matrix * b.matrix.transpose();
    let m = mixed_gramian(table, &bbt, &lags, grid, k, k);
    Ok(finish(m, grid.nodes()[k], k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{build_resolvent_table, TableRoute};
    use crate::{MemoryKernel, SpectralSystem};

    fn table(alpha: f64, modes: usize, grid: &TimeGrid) -> ResolventTable {
        let kernel = MemoryKernel::new(alpha, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(modes, 2 * modes + 3, 2.0).unwrap();
        build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::MLSeries, 1e-16).unwrap()
    }

    #[test]
    fn scalar_exponential_gramian() {
        let grid = TimeGrid::uniform(1.0, 513).unwrap();
        let g = assemble_gramian(&table(1e-12, 1, &grid), &ControlOperator::identity(1), &grid).unwrap();
        let exact = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((g.matrix[(0, 0)] - exact).abs() <= 1e-6, "{}", g.matrix[(0, 0)] - exact);
        assert_eq!(g.quadrature_steps, 513);
    }

    #[test]
    fn symmetric_and_semidefinite() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let t = table(1.0, 4, &grid);
        let b = ControlOperator::from_matrix(DMatrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + 2.0 * j as f64))).unwrap();
        let g = assemble_gramian(&t, &b, &grid).unwrap();
        assert!((&g.matrix - g.matrix.transpose()).amax() <= 1e-12);
        assert!(g.min_eigenvalue >= -1e-10);
    }

    #[test]
    fn killed_mode_leaves_structural_zeros() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let b = ControlOperator::identity(4).with_zeroed_modes(&[2]).unwrap();
        let g = assemble_gramian(&table(1.0, 4, &grid), &b, &grid).unwrap();
        for i in 0..4 {
            assert!(g.matrix[(1, i)].abs() <= 1e-14 && g.matrix[(i, 1)].abs() <= 1e-14);
        }
        assert!(g.min_eigenvalue <= 1e-12);
    }

    #[test]
    fn dimension_checked() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(matches!(assemble_gramian(&table(1.0, 3, &grid), &ControlOperator::identity(4), &grid), Err(Error::DimensionMismatch { .. })));
    }
}
