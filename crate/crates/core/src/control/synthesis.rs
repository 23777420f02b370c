//! Steering controls `u(t) = B^T G(T-t)^T J[R(lambda) k]`.

use nalgebra::DVector;

use super::duality::duality_map_spectral;
use super::gramian::Gramian;
use super::operator::ControlOperator;
use super::resolve::regularized_resolvent;
use super::signal::ControlSignal;
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;
use crate::spectral::SpectralSystem;
use crate::volterra::mild::{check_table, LagIndex};
use crate::volterra::TimeGrid;

/// `k = zeta1 - G(T) zeta - int_0^T G(T-s) f(s) ds` (trapezoid); `f_values = None` means `f = 0`.
pub fn target_offset(
    table: &ResolventTable,
    zeta: &DVector<f64>,
    zeta1: &DVector<f64>,
    f_values: Option<&[DVector<f64>]>,
    grid: &TimeGrid,
) -> Result<DVector<f64>> {
    check_table(table, zeta)?;
    if zeta1.len() != zeta.len() {
        return Err(Error::DimensionMismatch { expected: zeta.len(), found: zeta1.len() });
    }
    let lags = LagIndex::new(table, grid)?;
    let end = grid.steps();
    let free = table.apply(lags.get(end, 0), zeta)?;
    let mut k = zeta1 - free;
    if let Some(f) = f_values {
        if f.len() != end + 1 {
            return Err(Error::DimensionMismatch { expected: end + 1, found: f.len() });
        }
        let tau = grid.trapezoid_weights(end);
        let conv = DVector::from_fn(zeta.len(), |m, _| {
            let row = &table.values[m];
            (0..=end).map(|j| tau[j] * row[lags.get(end, j)] * f[j][m]).sum::<f64>()
        });
        k -= conv;
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedControl {
    pub control: ControlSignal,
    /// `R(lambda) k`
    pub z: DVector<f64>,
    /// `J[z]` projected on the modes
    pub dual: DVector<f64>,
}

/// `u(t_j) = B^T diag(s_m(T - t_j)) d` with `d = J[z]` and `d = z` when `p = 2`.
pub fn control_from_dual(table: &ResolventTable, b: &ControlOperator, dual: &DVector<f64>, grid: &TimeGrid) -> Result<ControlSignal> {
    let lags = LagIndex::new(table, grid)?;
    let end = grid.steps();
    let values = (0..=end)
        .map(|j| {
            let idx = lags.get(end, j);
            let v = DVector::from_fn(dual.len(), |m, _| table.values[m][idx] * dual[m]);
            b.matrix.tr_mul(&v)
        })
        .collect();
    ControlSignal::new(grid.clone(), values)
}

pub fn synthesize_control(
    table: &ResolventTable,
    b: &ControlOperator,
    gramian: &Gramian,
    lambda: f64,
    k: &DVector<f64>,
    grid: &TimeGrid,
    system: &SpectralSystem,
) -> Result<SynthesizedControl> {
    let z = regularized_resolvent(gramian, lambda, k, system)?;
    let dual = duality_map_spectral(&z, system)?;
    let control = control_from_dual(table, b, &dual, grid)?;
    Ok(SynthesizedControl { control, z, dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::assemble_gramian;
    use crate::resolvent::{build_resolvent_table, TableRoute};
    use crate::volterra::mild_quadrature;
    use crate::MemoryKernel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(alpha: f64, modes: usize, steps: usize) -> (ResolventTable, TimeGrid, SpectralSystem) {
        let kernel = MemoryKernel::new(alpha, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(modes, 2 * modes + 3, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let table = build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::MLSeries, 1e-16).unwrap();
        (table, grid, system)
    }

    #[test]
    fn offsets_without_forcing() {
        let (table, grid, _) = setup(1.0, 3, 16);
        let zeta1 = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(target_offset(&table, &DVector::zeros(3), &zeta1, None, &grid).unwrap(), zeta1);
        let zeta = DVector::from_vec(vec![0.5, -1.0, 0.25]);
        let k = target_offset(&table, &zeta, &zeta1, None, &grid).unwrap();
        assert_eq!(k, &zeta1 - table.apply(16, &zeta).unwrap());
        let zeros = vec![DVector::zeros(3); 17];
        assert_eq!(target_offset(&table, &zeta, &zeta1, Some(&zeros), &grid).unwrap(), k);
    }

    #[test]
    fn zero_offset_gives_zero_control() {
        let (table, grid, system) = setup(1.0, 3, 16);
        let b = ControlOperator::identity(3);
        let g = assemble_gramian(&table, &b, &grid).unwrap();
        let s = synthesize_control(&table, &b, &g, 1e-3, &DVector::zeros(3), &grid, &system).unwrap();
        assert_eq!(s.control.energy, 0.0);
    }

    #[test]
    fn scalar_memoryless_steering() {
        let (table, grid, system) = setup(1e-12, 1, 256);
        let b = ControlOperator::identity(1);
        let g = assemble_gramian(&table, &b, &grid).unwrap();
        let lambda = 1e-6;
        let zeta = DVector::from_vec(vec![0.0]);
        let k = DVector::from_vec(vec![1.0]);
        let s = synthesize_control(&table, &b, &g, lambda, &k, &grid, &system).unwrap();
        let z = 1.0 / (lambda + g.matrix[(0, 0)]);
        assert!((s.z[0] - z).abs() <= 1e-12 * z);
        for (j, t) in grid.nodes().iter().enumerate() {
            assert!((s.control.values[j][0] - (-(1.0 - t)).exp() * z).abs() <= 1e-9 * z);
        }
        let traj = mild_quadrature(&table, &zeta, &s.control.values, &grid).unwrap();
        assert!((traj.terminal()[0] - 1.0).abs() <= lambda * z * (1.0 + 1e-6));
    }

    #[test]
    fn control_replays_its_definition() {
        let (table, grid, system) = setup(1.0, 4, 32);
        let b = ControlOperator::from_matrix(nalgebra::DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.1 })).unwrap();
        let g = assemble_gramian(&table, &b, &grid).unwrap();
        let k = DVector::from_vec(vec![1.0, -0.5, 0.3, 0.1]);
        let s = synthesize_control(&table, &b, &g, 1e-3, &k, &grid, &system).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let j = rng.gen_range(0..=32);
            let t_back = 1.0 - grid.nodes()[j];
            let diag = DVector::from_fn(4, |m, _| table.value_at(m, t_back).unwrap() * s.dual[m]);
            assert!((b.matrix.transpose() * diag - &s.control.values[j]).amax() <= 1e-15);
        }
    }
}
