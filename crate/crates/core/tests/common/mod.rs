//! Helpers shared by integration tests.

#![allow(dead_code)]

use memsteer::control::ControlOperator;
use memsteer::resolvent::ResolventTable;
use memsteer::volterra::TimeGrid;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

/// Dense map from scaled controls `v_j = sqrt(tau_j) u_j` to `w(T)`, built
/// directly from the table entries at `T - t_j` on a uniform grid.
pub fn terminal_map(table: &ResolventTable, b: &ControlOperator, grid: &TimeGrid) -> DMatrix<f64> {
    let m = table.modes();
    let mu = b.control_dim();
    let k = grid.steps();
    let h = grid.horizon() / k as f64;
    let mut a = DMatrix::zeros(m, (k + 1) * mu);
    for j in 0..=k {
        let tau = if j == 0 || j == k { 0.5 * h } else { h };
        let lag = table.times.iter().position(|&t| (t - (grid.horizon() - grid.nodes()[j])).abs() < 1e-12).expect("lag in table");
        for row in 0..m {
            let s = table.values[row][lag];
            for c in 0..mu {
                a[(row, j * mu + c)] = tau.sqrt() * s * b.matrix[(row, c)];
            }
        }
    }
    a
}

/// Minimizer of `||A v - k||^2 + lambda ||v||^2` from the normal equations,
/// returned with its cost.
pub fn normal_equations(a: &DMatrix<f64>, k: &DVector<f64>, lambda: f64) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let lhs = a.transpose() * a + DMatrix::identity(n, n) * lambda;
    let v = lhs.cholesky().expect("normal matrix is SPD").solve(&(a.transpose() * k));
    let cost = (a * &v - k).norm_squared() + lambda * v.norm_squared();
    (v, cost)
}

pub fn quadratic_cost(a: &DMatrix<f64>, k: &DVector<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    (a * v - k).norm_squared() + lambda * v.norm_squared()
}
