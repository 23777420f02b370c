//! Forward sweep for `w = G(t) zeta + int G(t - s) [B u(s) + f(s, w(s))] ds`.

use nalgebra::DVector;

use super::grid::TimeGrid;
use super::mild::{check_table, partial_mild_sum, LagIndex, Trajectory, TrajectoryMeta};
use crate::control::{ControlOperator, ControlSignal, Nonlinearity};
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;
use crate::spectral::SpectralSystem;

pub const MAX_SUB_ITERATIONS: usize = 20;
pub const SUB_ITERATION_TOL: f64 = 1e-12;

/// Trapezoid sweep; the implicit `f(t_k, w_k)` term is resolved by fixed-point iteration.
pub fn simulate_semilinear(
    system: &SpectralSystem,
    table: &ResolventTable,
    grid: &TimeGrid,
    b: &ControlOperator,
    u: &ControlSignal,
    f: &Nonlinearity,
    zeta: &DVector<f64>,
) -> Result<Trajectory> {
    check_table(table, zeta)?;
    if b.state_dim() != zeta.len() {
        return Err(Error::DimensionMismatch { expected: zeta.len(), found: b.state_dim() });
    }
    if u.values.len() != grid.steps() + 1 {
        return Err(Error::DimensionMismatch { expected: grid.steps() + 1, found: u.values.len() });
    }
    if u.dim() != b.control_dim() {
        return Err(Error::DimensionMismatch { expected: b.control_dim(), found: u.dim() });
    }
    let lags = LagIndex::new(table, grid)?;
    let nodes = grid.nodes();
    let steps = grid.steps();
    let controlled: Vec<DVector<f64>> = u.values.iter().map(|v| &b.matrix * v).collect();

    let mut states = Vec::with_capacity(steps + 1);
    let mut forcing = Vec::with_capacity(steps + 1);
    let mut iterations = vec![0; steps + 1];
    let mut residuals = vec![0.0; steps + 1];
    states.push(zeta.clone());
    forcing.push(&controlled[0] + f.eval(nodes[0], zeta, system)?);

    for k in 1..=steps {
        let tau = grid.trapezoid_weights(k);
        let base = partial_mild_sum(table, &lags, k, k, &tau, zeta, &forcing);
        let s0: DVector<f64> = DVector::from_fn(zeta.len(), |m, _| table.values[m][lags.get(k, k)]);
        let implicit = |h: &DVector<f64>| -> DVector<f64> { DVector::from_fn(zeta.len(), |m, _| base[m] + tau[k] * s0[m] * h[m]) };

        let (w, h) = if f.is_zero() {
            let h = &controlled[k] + DVector::zeros(zeta.len());
            (implicit(&h), h)
        } else {
            let mut h = &controlled[k] + f.eval(nodes[k], &states[k - 1], system)?;
            let mut w = implicit(&h);
            let mut residual = f64::INFINITY;
            let mut done = false;
            for it in 1..=MAX_SUB_ITERATIONS {
                h = &controlled[k] + f.eval(nodes[k], &w, system)?;
                let next = implicit(&h);
                residual = (&next - &w).norm();
                w = next;
                if !residual.is_finite() {
                    break;
                }
                if residual <= SUB_ITERATION_TOL * (1.0 + w.norm()) {
                    iterations[k] = it;
                    residuals[k] = residual;
                    done = true;
                    break;
                }
            }
            if !done {
                return Err(Error::SubIterationDiverged { t: nodes[k], residual });
            }
            // forcing consistent with the accepted state
            h = &controlled[k] + f.eval(nodes[k], &w, system)?;
            (w, h)
        };
        states.push(w);
        forcing.push(h);
    }
    let meta = TrajectoryMeta { scheme: "semilinear_trapezoid".into(), grid_kind: grid.kind(), sub_iterations: iterations, sub_residuals: residuals };
    Ok(Trajectory::from_columns(grid.clone(), &states, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{build_resolvent_table, TableRoute};
    use crate::volterra::mild_quadrature;
    use crate::MemoryKernel;

    fn setup(steps: usize) -> (SpectralSystem, ResolventTable, TimeGrid) {
        let kernel = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(4, 65, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let table = build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::MLSeries, 1e-16).unwrap();
        (system, table, grid)
    }

    fn zeta() -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.5, -0.3, 0.2])
    }

    fn control(grid: &TimeGrid) -> ControlSignal {
        let vals = grid.nodes().iter().map(|&t| DVector::from_fn(4, |m, _| (t * (m + 1) as f64).cos())).collect();
        ControlSignal::new(grid.clone(), vals).unwrap()
    }

    #[test]
    fn linear_path_matches_mild_quadrature() {
        let (system, table, grid) = setup(64);
        let b = ControlOperator::identity(4);
        let u = control(&grid);
        let a = simulate_semilinear(&system, &table, &grid, &b, &u, &Nonlinearity::Zero, &zeta()).unwrap();
        let m = mild_quadrature(&table, &zeta(), &u.values, &grid).unwrap();
        assert!(a.sup_distance(&m).unwrap() <= 1e-12);
        let free = simulate_semilinear(&system, &table, &grid, &b, &ControlSignal::zero(&grid, 4), &Nonlinearity::Zero, &zeta()).unwrap();
        for k in 0..=64 {
            assert!((free.state(k) - table.apply(k, &zeta()).unwrap()).amax() <= 1e-12);
        }
    }

    #[test]
    fn tiny_nonlinearity_is_a_small_perturbation() {
        let (system, table, grid) = setup(64);
        let b = ControlOperator::identity(4);
        let u = control(&grid);
        let lin = simulate_semilinear(&system, &table, &grid, &b, &u, &Nonlinearity::Zero, &zeta()).unwrap();
        let f = Nonlinearity::SineCosine { k0: 1e-8, horizon: 1.0 };
        let non = simulate_semilinear(&system, &table, &grid, &b, &u, &f, &zeta()).unwrap();
        assert!(non.sup_distance(&lin).unwrap() <= 1e-6);
        assert!(non.meta.sub_iterations[1..].iter().all(|&n| n >= 1 && n <= MAX_SUB_ITERATIONS));
    }

    #[test]
    fn self_convergence_under_refinement() {
        let f = Nonlinearity::SineCosine { k0: 0.1, horizon: 1.0 };
        let b = ControlOperator::identity(4);
        let terminal: Vec<DVector<f64>> = [128, 256, 512]
            .iter()
            .map(|&k| {
                let (system, table, grid) = setup(k);
                let u = control(&grid);
                simulate_semilinear(&system, &table, &grid, &b, &u, &f, &zeta()).unwrap().terminal()
            })
            .collect();
        let e1 = (&terminal[0] - &terminal[1]).norm();
        let e2 = (&terminal[1] - &terminal[2]).norm();
        let order = (e1 / e2).log2();
        assert!(order >= 1.5, "order {order} ({e1:e}, {e2:e})");
    }

    #[test]
    fn divergent_sub_iteration_is_reported() {
        let kernel = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(2, 9, 2.0).unwrap();
        let grid = TimeGrid::uniform(6.0, 2).unwrap();
        let table = build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::Contour, 1e-16).unwrap();
        // the implicit map has slope tau_k = 1.5 > 1
        let f = Nonlinearity::ExpDecayLinear { mu: 0.0 };
        let err = simulate_semilinear(&system, &table, &grid, &ControlOperator::identity(2), &ControlSignal::zero(&grid, 2), &f, &DVector::from_vec(vec![1.0, 1.0]))
            .unwrap_err();
        assert!(matches!(err, Error::SubIterationDiverged { .. }), "{err:?}");
    }
}
