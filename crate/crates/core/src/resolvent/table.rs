//! Tables of `s_m(t_k)` computed by one of three routes.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{scalar_resolvent_contour_with, TalbotOptions};
use super::series::{scalar_resolvent_ml_with, SeriesOptions};
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::spectral::SpectralSystem;
use crate::volterra::{LinearStepper, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableRoute {
    MLSeries,
    Contour,
    Volterra,
}

impl TableRoute {
    pub fn as_str(self) -> &'static str {
        match self {
            TableRoute::MLSeries => "MLSeries",
            TableRoute::Contour => "Contour",
            TableRoute::Volterra => "Volterra",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "MLSeries" => Ok(TableRoute::MLSeries),
            "Contour" => Ok(TableRoute::Contour),
            "Volterra" => Ok(TableRoute::Volterra),
            other => Err(Error::InvalidArgument(format!("unknown resolvent route `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableOptions {
    pub series: SeriesOptions,
    pub contour: TalbotOptions,
    /// Largest step of the Volterra route.
    pub volterra_max_step: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { series: SeriesOptions::default(), contour: TalbotOptions::default(), volterra_max_step: 1.0 / 2048.0 }
    }
}

/// `values[m][k] = s_{m+1}(times[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventTable {
    pub kernel: MemoryKernel,
    pub eigenvalues: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub route: TableRoute,
    /// Route that actually produced each entry (after fallback).
    pub entry_routes: Vec<Vec<TableRoute>>,
    pub sup_norm: f64,
    pub error_estimates: Vec<Vec<f64>>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.first() != Some(&0.0) {
        return Err(Error::InvalidArgument("table times must start at 0".into()));
    }
    if !times.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("table times must be strictly increasing".into()));
    }
    Ok(())
}

fn sup_norm(values: &[Vec<f64>]) -> f64 {
    values.iter().flatten().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Builds a table with default options; `tol` is the series tolerance.
pub fn build_resolvent_table(kernel: &MemoryKernel, system: &SpectralSystem, times: &[f64], route: TableRoute, tol: f64) -> Result<ResolventTable> {
    let mut opts = TableOptions::default();
    opts.series.tol = tol;
    build_resolvent_table_with(kernel, system, times, route, &opts)
}

pub fn build_resolvent_table_with(
    kernel: &MemoryKernel,
    system: &SpectralSystem,
    times: &[f64],
    route: TableRoute,
    opts: &TableOptions,
) -> Result<ResolventTable> {
    check_times(times)?;
    let eigenvalues = system.eigenvalues().to_vec();
    let (values, errors, routes) = match route {
        TableRoute::Volterra => volterra_entries(kernel, &eigenvalues, times, opts)?,
        _ => pointwise_entries(kernel, &eigenvalues, times, route, opts)?,
    };
    let sup = sup_norm(&values);
    Ok(ResolventTable { kernel: *kernel, eigenvalues, times: times.to_vec(), values, route, entry_routes: routes, sup_norm: sup, error_estimates: errors })
}

type Entries = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<TableRoute>>);

fn pointwise_entries(kernel: &MemoryKernel, eigenvalues: &[f64], times: &[f64], route: TableRoute, opts: &TableOptions) -> Result<Entries> {
    let mut contour_opts = opts.contour;
    contour_opts.branch_point = -kernel.beta();
    let entry = |lam: f64, t: f64| -> Result<(f64, f64, TableRoute)> {
        if t == 0.0 {
            return Ok((1.0, 0.0, route));
        }
        let series = scalar_resolvent_ml_with(kernel, lam, t, &opts.series);
        match route {
            TableRoute::MLSeries => match series {
                Ok(s) => Ok((s.value, s.error_estimate, TableRoute::MLSeries)),
                Err(Error::NotConverged { .. }) => {
                    let c = scalar_resolvent_contour_with(kernel, lam, t, &contour_opts)?;
                    Ok((c.value, c.doubling_difference, TableRoute::Contour))
                }
                Err(e) => Err(e),
            },
            _ => {
                let c = scalar_resolvent_contour_with(kernel, lam, t, &contour_opts)?;
                let err = match series {
                    Ok(s) => c.doubling_difference.max(s.error_estimate),
                    Err(_) => c.doubling_difference,
                };
                Ok((c.value, err, TableRoute::Contour))
            }
        }
    };
    let n = times.len();
    let flat: Vec<(f64, f64, TableRoute)> = (0..eigenvalues.len() * n)
        .into_par_iter()
        .map(|idx| entry(eigenvalues[idx / n], times[idx % n]))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(eigenvalues.len());
    let mut errors = Vec::with_capacity(eigenvalues.len());
    let mut routes = Vec::with_capacity(eigenvalues.len());
    for row in flat.chunks(n) {
        values.push(row.iter().map(|e| e.0).collect());
        errors.push(row.iter().map(|e| e.1).collect());
        routes.push(row.iter().map(|e| e.2).collect());
    }
    Ok((values, errors, routes))
}

/// Steps each mode on a fine uniform grid containing the table times and
/// estimates the error from the solution with twice the step.
fn volterra_entries(kernel: &MemoryKernel, eigenvalues: &[f64], times: &[f64], opts: &TableOptions) -> Result<Entries> {
    let n = times.len();
    let m = eigenvalues.len();
    if n == 1 {
        return Ok((vec![vec![1.0]; m], vec![vec![0.0]; m], vec![vec![TableRoute::Volterra]; m]));
    }
    let big_t = times[n - 1];
    let spacing = big_t / (n - 1) as f64;
    if times.iter().enumerate().any(|(k, &t)| (t - k as f64 * spacing).abs() > 1e-12 * big_t) {
        return Err(Error::GridIncompatible("the Volterra route needs uniformly spaced table times".into()));
    }
    let sub = 2 * (spacing / (2.0 * opts.volterra_max_step)).ceil().max(1.0) as usize;
    let fine = LinearStepper::new(kernel, &TimeGrid::uniform(big_t, (n - 1) * sub)?)?;
    let coarse = LinearStepper::new(kernel, &TimeGrid::uniform(big_t, (n - 1) * sub / 2)?)?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = eigenvalues
        .par_iter()
        .map(|&lam| {
            let wf = fine.solve(lam, 1.0, &vec![0.0; (n - 1) * sub + 1])?;
            let wc = coarse.solve(lam, 1.0, &vec![0.0; (n - 1) * sub / 2 + 1])?;
            let vals: Vec<f64> = (0..n).map(|k| wf[k * sub]).collect();
            let errs: Vec<f64> = (0..n).map(|k| (wf[k * sub] - wc[k * sub / 2]).abs() / 3.0).collect();
            Ok((vals, errs))
        })
        .collect::<Result<_>>()?;
    let (values, errors) = rows.into_iter().unzip();
    Ok((values, errors, vec![vec![TableRoute::Volterra; n]; m]))
}

impl ResolventTable {
    pub fn modes(&self) -> usize {
        self.values.len()
    }

    /// Index of `t` among the table times (tolerance 1e-12 relative to the span).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let span = self.times.last().copied().unwrap_or(0.0).max(1.0);
        let tol = 1e-12 * span;
        let pos = self.times.partition_point(|&x| x < t - tol);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= tol).then_some(pos)
    }

    /// `s_{m+1}(t)` for a table time `t`.
    pub fn value_at(&self, m: usize, t: f64) -> Result<f64> {
        let k = self.index_of(t).ok_or_else(|| Error::GridIncompatible(format!("t = {t} is not a table node")))?;
        Ok(self.values[m][k])
    }

    /// Diagonal action `diag(s_m(t_k)) state`.
    pub fn apply(&self, t_index: usize, state: &DVector<f64>) -> Result<DVector<f64>> {
        if state.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), found: state.len() });
        }
        if t_index >= self.times.len() {
            return Err(Error::InvalidArgument(format!("time index {t_index} out of range")));
        }
        Ok(DVector::from_fn(state.len(), |m, _| self.values[m][t_index] * state[m]))
    }

    /// CSV with header `m,t,s,err,route` (modes numbered from 1, 17 significant digits).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m", "t", "s", "err", "route"]).map_err(csv_err)?;
        for (m, row) in self.values.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                w.write_record([
                    (m + 1).to_string(),
                    format!("{:.16e}", self.times[k]),
                    format!("{v:.16e}"),
                    format!("{:.16e}", self.error_estimates[m][k]),
                    self.entry_routes[m][k].as_str().to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Inverse of [`ResolventTable::to_csv`]; the table-level route is taken from the first entry.
    pub fn from_csv(kernel: &MemoryKernel, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        if header.iter().collect::<Vec<_>>() != ["m", "t", "s", "err", "route"] {
            return Err(Error::InvalidArgument("unexpected resolvent table header".into()));
        }
        let mut values: Vec<Vec<f64>> = vec![];
        let mut errors: Vec<Vec<f64>> = vec![];
        let mut routes: Vec<Vec<TableRoute>> = vec![];
        let mut times: Vec<f64> = vec![];
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let m: usize = parse_field(&rec, 0)?;
            let t: f64 = parse_field(&rec, 1)?;
            if m == 0 {
                return Err(Error::InvalidArgument("modes are numbered from 1".into()));
            }
            if m > values.len() {
                values.push(vec![]);
                errors.push(vec![]);
                routes.push(vec![]);
            }
            if m == 1 {
                times.push(t);
            }
            values[m - 1].push(parse_field(&rec, 2)?);
            errors[m - 1].push(parse_field(&rec, 3)?);
            routes[m - 1].push(TableRoute::parse(rec.get(4).unwrap_or(""))?);
        }
        check_times(&times)?;
        let eigenvalues = (1..=values.len()).map(|m| (m * m) as f64).collect();
        let route = routes.first().and_then(|r| r.first()).copied().unwrap_or(TableRoute::MLSeries);
        let sup = sup_norm(&values);
        Ok(Self { kernel: *kernel, eigenvalues, times, values, route, entry_routes: routes, sup_norm: sup, error_estimates: errors })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::InvalidArgument(format!("bad csv field {i} in {rec:?}")))
}

/// Diagonal action of the table at `t_index`.
pub fn apply_resolvent(table: &ResolventTable, t_index: usize, state: &DVector<f64>) -> Result<DVector<f64>> {
    table.apply(t_index, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn acceptance_kernel() -> MemoryKernel {
        MemoryKernel::new(1.0, 0.5, 0.5).unwrap()
    }

    fn grid33() -> Vec<f64> {
        (0..33).map(|k| k as f64 / 32.0).collect()
    }

    #[test]
    fn single_time_gives_ones() {
        let sys = SpectralSystem::new(3, 33, 2.0).unwrap();
        for route in [TableRoute::MLSeries, TableRoute::Contour, TableRoute::Volterra] {
            let t = build_resolvent_table(&acceptance_kernel(), &sys, &[0.0], route, 1e-15).unwrap();
            assert_eq!(t.values, vec![vec![1.0]; 3]);
            assert_eq!(t.sup_norm, 1.0);
        }
    }

    #[test]
    fn routes_agree_and_bound_holds() {
        let sys = SpectralSystem::new(5, 33, 2.0).unwrap();
        let times = grid33();
        let ml = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::MLSeries, 1e-15).unwrap();
        let ct = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::Contour, 1e-15).unwrap();
        let mut worst: f64 = 0.0;
        for m in 0..5 {
            assert_eq!(ml.values[m][0], 1.0);
            assert_eq!(ct.values[m][0], 1.0);
            for k in 0..33 {
                worst = worst.max((ml.values[m][k] - ct.values[m][k]).abs());
                assert_eq!(ml.entry_routes[m][k], TableRoute::MLSeries);
            }
        }
        assert!(worst <= 1e-12, "{worst}");
        assert!(ml.sup_norm >= 1.0 && ml.sup_norm <= 1.0 + 1e-8);
    }

    #[test]
    fn series_falls_back_to_contour() {
        let sys = SpectralSystem::new(8, 33, 2.0).unwrap();
        let times: Vec<f64> = (0..5).map(|k| k as f64 * 0.5).collect();
        let t = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::MLSeries, 1e-15).unwrap();
        assert_eq!(t.entry_routes[7][4], TableRoute::Contour);
        assert!((t.values[7][4] + 0.000_365_536_259_296_474).abs() < 1e-12);
    }

    #[test]
    fn volterra_route_close_to_series() {
        let sys = SpectralSystem::new(3, 33, 2.0).unwrap();
        let times = grid33();
        let v = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::Volterra, 1e-15).unwrap();
        let ml = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::MLSeries, 1e-15).unwrap();
        for m in 0..3 {
            for k in 0..33 {
                assert!((v.values[m][k] - ml.values[m][k]).abs() <= 1e-4);
                assert!(v.error_estimates[m][k] < 1e-4);
            }
        }
        assert!(build_resolvent_table(&acceptance_kernel(), &sys, &[0.0, 0.1, 0.3], TableRoute::Volterra, 1e-15).is_err());
    }

    #[test]
    fn csv_and_json_roundtrip() {
        let sys = SpectralSystem::new(3, 33, 2.0).unwrap();
        let times: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
        let t = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::Contour, 1e-15).unwrap();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("m,t,s,err,route\n"));
        let back = ResolventTable::from_csv(&acceptance_kernel(), &text).unwrap();
        assert_eq!(back, t);
        let json = serde_json::to_string(&t).unwrap();
        let back: ResolventTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_times() {
        let sys = SpectralSystem::new(2, 33, 2.0).unwrap();
        assert!(build_resolvent_table(&acceptance_kernel(), &sys, &[0.1, 0.2], TableRoute::Contour, 1e-15).is_err());
        assert!(build_resolvent_table(&acceptance_kernel(), &sys, &[0.0, 0.2, 0.2], TableRoute::Contour, 1e-15).is_err());
    }

    #[test]
    fn apply_is_diagonal() {
        let sys = SpectralSystem::new(4, 33, 2.0).unwrap();
        let times: Vec<f64> = (0..5).map(|k| k as f64 / 4.0).collect();
        let t = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::MLSeries, 1e-15).unwrap();
        let zero = DVector::zeros(4);
        assert_eq!(apply_resolvent(&t, 2, &zero).unwrap(), zero);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let out = apply_resolvent(&t, 3, &e2).unwrap();
        assert_eq!(out[1], t.values[1][3]);
        assert_eq!(out[0], 0.0);
        assert!(apply_resolvent(&t, 3, &DVector::zeros(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn action_is_bounded_by_sup_norm(v in proptest::collection::vec(-10.0f64..10.0, 4), k in 0usize..5) {
            let sys = SpectralSystem::new(4, 33, 2.0).unwrap();
            let times: Vec<f64> = (0..5).map(|k| k as f64 / 4.0).collect();
            let t = build_resolvent_table(&acceptance_kernel(), &sys, &times, TableRoute::MLSeries, 1e-15).unwrap();
            let v = DVector::from_vec(v);
            let out = t.apply(k, &v).unwrap();
            prop_assert!(out.norm() <= t.sup_norm * v.norm() * (1.0 + 1e-15));
        }
    }
}
