//! Trajectories and trapezoid evaluation of the mild solution.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::grid::{GridKind, TimeGrid};
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub scheme: String,
    pub grid_kind: GridKind,
    /// Fixed-point sub-iterations used at each node (empty for linear solves).
    pub sub_iterations: Vec<usize>,
    pub sub_residuals: Vec<f64>,
}

/// `states[m][k]` is mode `m + 1` at node `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub(crate) fn from_columns(grid: TimeGrid, columns: &[DVector<f64>], meta: TrajectoryMeta) -> Self {
        let modes = columns.first().map_or(0, |c| c.len());
        let states = (0..modes).map(|m| columns.iter().map(|c| c[m]).collect()).collect();
        Self { grid, states, meta }
    }

    pub fn modes(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, k: usize) -> DVector<f64> {
        DVector::from_fn(self.modes(), |m, _| self.states[m][k])
    }

    pub fn terminal(&self) -> DVector<f64> {
        self.state(self.grid.steps())
    }

    /// Largest Euclidean state norm over the grid.
    pub fn sup_norm(&self) -> f64 {
        (0..=self.grid.steps()).map(|k| self.state(k).norm()).fold(0.0, f64::max)
    }

    /// Largest Euclidean distance between two trajectories on the same grid.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.grid.steps() != other.grid.steps() || self.modes() != other.modes() {
            return Err(Error::GridIncompatible("trajectories live on different grids".into()));
        }
        Ok((0..=self.grid.steps()).map(|k| (self.state(k) - other.state(k)).norm()).fold(0.0, f64::max))
    }

    /// CSV with header `k,t,m,w` (modes numbered from 1).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["k", "t", "m", "w"]).map_err(io)?;
        for (k, t) in self.grid.nodes().iter().enumerate() {
            for (m, row) in self.states.iter().enumerate() {
                w.write_record([k.to_string(), format!("{t:.16e}"), (m + 1).to_string(), format!("{:.16e}", row[k])]).map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
    }
}

/// Table indices of `t_k - t_j`.
#[derive(Debug, Clone)]
pub(crate) enum LagIndex {
    /// Uniform grid: index of `(k - j) h`.
    ByDifference(Vec<usize>),
    Dense(Vec<Vec<usize>>),
}

impl LagIndex {
    pub(crate) fn new(table: &ResolventTable, grid: &TimeGrid) -> Result<Self> {
        let nodes = grid.nodes();
        let find = |t: f64| table.index_of(t).ok_or_else(|| Error::GridIncompatible(format!("lag {t} is not a resolvent table node")));
        if grid.is_uniform() {
            nodes.iter().map(|&t| find(t)).collect::<Result<Vec<_>>>().map(LagIndex::ByDifference)
        } else {
            let rows = (0..nodes.len())
                .map(|k| (0..=k).map(|j| find(nodes[k] - nodes[j])).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(LagIndex::Dense(rows))
        }
    }

    pub(crate) fn get(&self, k: usize, j: usize) -> usize {
        match self {
            LagIndex::ByDifference(d) => d[k - j],
            LagIndex::Dense(rows) => rows[k][j],
        }
    }
}

pub(crate) fn check_table(table: &ResolventTable, zeta: &DVector<f64>) -> Result<()> {
    if zeta.len() != table.modes() {
        return Err(Error::DimensionMismatch { expected: table.modes(), found: zeta.len() });
    }
    Ok(())
}

/// `s(t_k) zeta + sum_{j < upto} tau_j s(t_k - t_j) h_j`, summed mode by mode in index order.
pub(crate) fn partial_mild_sum(
    table: &ResolventTable,
    lags: &LagIndex,
    k: usize,
    upto: usize,
    tau: &[f64],
    zeta: &DVector<f64>,
    forcing: &[DVector<f64>],
) -> DVector<f64> {
    DVector::from_fn(zeta.len(), |m, _| {
        let row = &table.values[m];
        let mut acc = row[lags.get(k, 0)] * zeta[m];
        for j in 0..upto {
            acc += tau[j] * row[lags.get(k, j)] * forcing[j][m];
        }
        acc
    })
}

/// Mild solution `w(t_k) = G(t_k) zeta + int_0^{t_k} G(t_k - s) h(s) ds` by the trapezoid rule.
pub fn mild_quadrature(table: &ResolventTable, zeta: &DVector<f64>, forcing: &[DVector<f64>], grid: &TimeGrid) -> Result<Trajectory> {
    check_table(table, zeta)?;
    if forcing.len() != grid.steps() + 1 {
        return Err(Error::DimensionMismatch { expected: grid.steps() + 1, found: forcing.len() });
    }
    if let Some(bad) = forcing.iter().find(|h| h.len() != zeta.len()) {
        return Err(Error::DimensionMismatch { expected: zeta.len(), found: bad.len() });
    }
    let lags = LagIndex::new(table, grid)?;
    let columns: Vec<DVector<f64>> = (0..=grid.steps())
        .map(|k| {
            let tau = grid.trapezoid_weights(k);
            if k == 0 {
                zeta.clone()
            } else {
                partial_mild_sum(table, &lags, k, k + 1, &tau, zeta, forcing)
            }
        })
        .collect();
    let meta = TrajectoryMeta { scheme: "mild_trapezoid".into(), grid_kind: grid.kind(), sub_iterations: Vec::new(), sub_residuals: Vec::new() };
    Ok(Trajectory::from_columns(grid.clone(), &columns, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{build_resolvent_table, TableRoute};
    use crate::volterra::step_linear_mode;
    use crate::{MemoryKernel, SpectralSystem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(alpha: f64, modes: usize, steps: usize) -> (ResolventTable, TimeGrid, SpectralSystem, MemoryKernel) {
        let kernel = MemoryKernel::new(alpha, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(modes, 2 * modes + 3, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let table = build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::MLSeries, 1e-16).unwrap();
        (table, grid, system, kernel)
    }

    #[test]
    fn zero_forcing_is_the_resolvent_action() {
        let (table, grid, _, _) = setup(1.0, 3, 32);
        let zeta = DVector::from_vec(vec![1.0, -0.5, 0.25]);
        let traj = mild_quadrature(&table, &zeta, &vec![DVector::zeros(3); 33], &grid).unwrap();
        assert_eq!(traj.state(0), zeta);
        for k in 0..=32 {
            assert_eq!(traj.state(k), table.apply(k, &zeta).unwrap());
        }
    }

    #[test]
    fn constant_forcing_in_the_memoryless_limit() {
        let (table, grid, _, _) = setup(1e-12, 1, 257);
        let zeta = DVector::from_vec(vec![0.7]);
        let c = 0.3;
        let traj = mild_quadrature(&table, &zeta, &vec![DVector::from_vec(vec![c]); 258], &grid).unwrap();
        let e = (-1.0f64).exp();
        let exact = e * 0.7 + c * (1.0 - e);
        assert!((traj.terminal()[0] - exact).abs() <= 1e-4);
    }

    #[test]
    fn agrees_with_direct_stepping() {
        let (table, grid, system, kernel) = setup(1.0, 2, 512);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // smooth random forcing
        let coef: Vec<[f64; 3]> = (0..2).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let h = |m: usize, t: f64| coef[m][0] + coef[m][1] * (3.0 * t).sin() + coef[m][2] * t * t;
        let forcing: Vec<DVector<f64>> = grid.nodes().iter().map(|&t| DVector::from_fn(2, |m, _| h(m, t))).collect();
        let zeta = DVector::from_vec(vec![1.0, 0.5]);
        let traj = mild_quadrature(&table, &zeta, &forcing, &grid).unwrap();
        for m in 0..2 {
            let g: Vec<f64> = grid.nodes().iter().map(|&t| h(m, t)).collect();
            let w = step_linear_mode(&kernel, system.eigenvalues()[m], &grid, zeta[m], &g).unwrap();
            let diff = w.iter().zip(&traj.states[m]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-3, "mode {}: {diff}", m + 1);
        }
    }

    #[test]
    fn missing_lags_are_reported() {
        let (table, _, _, _) = setup(1.0, 1, 8);
        let grid = TimeGrid::uniform(1.0, 6).unwrap();
        let err = mild_quadrature(&table, &DVector::from_vec(vec![1.0]), &vec![DVector::zeros(1); 7], &grid).unwrap_err();
        assert!(matches!(err, Error::GridIncompatible(_)));
    }

    #[test]
    fn csv_layout() {
        let (table, grid, _, _) = setup(1.0, 2, 4);
        let traj = mild_quadrature(&table, &DVector::from_vec(vec![1.0, 2.0]), &vec![DVector::zeros(2); 5], &grid).unwrap();
        let csv = traj.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,t,m,w");
        assert_eq!(lines.len(), 1 + 5 * 2);
        assert!(lines[2].starts_with("0,0.0000000000000000e0,2,2.0000000000000000e0"));
        let back: Trajectory = serde_json::from_str(&traj.to_json().unwrap()).unwrap();
        assert_eq!(back, traj);
    }
}
