//! Closed-loop steering by Picard iteration of `w -> G zeta + int G [B u(w) + f(w)]`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::gramian::{assemble_gramian, Gramian};
use super::nonlinearity::Nonlinearity;
use super::operator::ControlOperator;
use super::resolve::regularized_resolvent;
use super::signal::ControlSignal;
use super::synthesis::{synthesize_control, target_offset};
use crate::error::{Error, Result};
use crate::resolvent::ResolventTable;
use crate::spectral::SpectralSystem;
use crate::volterra::{mild_quadrature, TimeGrid, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringProblem {
    pub zeta: DVector<f64>,
    pub zeta1: DVector<f64>,
    pub horizon: f64,
    pub lambda_reg: f64,
    pub nonlinearity: Nonlinearity,
    pub duality_p: f64,
}

impl SteeringProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_reg > 0.0 && self.lambda_reg.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda_reg must be positive (got {})", self.lambda_reg)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive (got {})", self.horizon)));
        }
        if !(self.duality_p >= 2.0) {
            return Err(Error::InvalidArgument(format!("duality exponent must be at least 2 (got {})", self.duality_p)));
        }
        if self.zeta.len() != self.zeta1.len() {
            return Err(Error::DimensionMismatch { expected: self.zeta.len(), found: self.zeta1.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub terminal: f64,
    pub control: f64,
    pub total: f64,
}

/// `||w_T - zeta1||^2 + lambda int ||u||^2`.
pub fn cost_functional(w_t: &DVector<f64>, zeta1: &DVector<f64>, u: &ControlSignal, lambda: f64, system: &SpectralSystem) -> Result<CostBreakdown> {
    let miss = system.state_norm(&(w_t - zeta1))?;
    let terminal = miss * miss;
    let control = lambda * u.energy;
    Ok(CostBreakdown { terminal, control, total: terminal + control })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub trajectory: Trajectory,
    pub control: ControlSignal,
    pub terminal_miss: f64,
    pub picard_iterations: usize,
    pub picard_residuals: Vec<f64>,
    pub cost: f64,
    pub cost_terms: CostBreakdown,
    pub terminal_identity_residual: f64,
}

fn nonlinear_values(f: &Nonlinearity, w: &Trajectory, system: &SpectralSystem) -> Result<Option<Vec<DVector<f64>>>> {
    if f.is_zero() {
        return Ok(None);
    }
    w.grid.nodes().iter().enumerate().map(|(k, &t)| f.eval(t, &w.state(k), system)).collect::<Result<Vec<_>>>().map(Some)
}

struct Step {
    next: Trajectory,
    control: ControlSignal,
}

struct Loop<'a> {
    problem: &'a SteeringProblem,
    system: &'a SpectralSystem,
    table: &'a ResolventTable,
    b: &'a ControlOperator,
    grid: &'a TimeGrid,
    gramian: Gramian,
}

impl Loop<'_> {
    /// One application of the closed-loop map; `w = None` evaluates it with `f = 0`.
    fn apply(&self, w: Option<&Trajectory>) -> Result<Step> {
        let fvals = match w {
            Some(w) => nonlinear_values(&self.problem.nonlinearity, w, self.system)?,
            None => None,
        };
        let offset = target_offset(self.table, &self.problem.zeta, &self.problem.zeta1, fvals.as_deref(), self.grid)?;
        let synth = synthesize_control(self.table, self.b, &self.gramian, self.problem.lambda_reg, &offset, self.grid, self.system)?;
        let forcing: Vec<DVector<f64>> = synth
            .control
            .values
            .iter()
            .enumerate()
            .map(|(j, u)| {
                let bu = &self.b.matrix * u;
                match &fvals {
                    Some(f) => bu + &f[j],
                    None => bu,
                }
            })
            .collect();
        let mut next = mild_quadrature(self.table, &self.problem.zeta, &forcing, self.grid)?;
        next.meta.scheme = "closed_loop_picard".into();
        Ok(Step { next, control: synth.control })
    }
}

/// Picard iteration from the `f = 0` trajectory; converged when the sup-norm
/// update is at most `tol (1 + sup ||w||)`.
#[allow(clippy::too_many_arguments)]
pub fn closed_loop_picard(
    problem: &SteeringProblem,
    system: &SpectralSystem,
    table: &ResolventTable,
    b: &ControlOperator,
    grid: &TimeGrid,
    tol: f64,
    max_iter: usize,
) -> Result<SteeringResult> {
    problem.validate()?;
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidArgument("Picard iteration needs tol > 0 and max_iter >= 1".into()));
    }
    if system.p() != problem.duality_p {
        return Err(Error::InvalidArgument(format!("system uses p = {} but the problem asks for p = {}", system.p(), problem.duality_p)));
    }
    if (grid.horizon() - problem.horizon).abs() > 1e-12 * problem.horizon {
        return Err(Error::GridIncompatible(format!("grid horizon {} differs from problem horizon {}", grid.horizon(), problem.horizon)));
    }
    let gramian = assemble_gramian(table, b, grid)?;
    let lp = Loop { problem, system, table, b, grid, gramian };
    let mut current = lp.apply(None)?.next;
    let mut residuals = Vec::new();
    for iteration in 1..=max_iter {
        let step = lp.apply(Some(&current))?;
        let update = step.next.sup_distance(&current)?;
        residuals.push(update);
        if !update.is_finite() {
            return Err(Error::PicardNotConverged { iterations: iteration, update });
        }
        let scale = 1.0 + step.next.sup_norm();
        if update <= tol * scale {
            return finish(&lp, step.next, step.control, iteration, residuals);
        }
        current = step.next;
    }
    Err(Error::PicardNotConverged { iterations: max_iter, update: residuals.last().copied().unwrap_or(f64::NAN) })
}

/// Diagnostics of the accepted iterate `w` and the control that produced it.
/// The terminal identity uses the offset recomputed from `w` itself.
fn finish(lp: &Loop<'_>, trajectory: Trajectory, control: ControlSignal, iterations: usize, residuals: Vec<f64>) -> Result<SteeringResult> {
    let p = lp.problem;
    let w_t = trajectory.terminal();
    let fvals = nonlinear_values(&p.nonlinearity, &trajectory, lp.system)?;
    let offset = target_offset(lp.table, &p.zeta, &p.zeta1, fvals.as_deref(), lp.grid)?;
    let z = regularized_resolvent(&lp.gramian, p.lambda_reg, &offset, lp.system)?;
    let identity = &w_t - &p.zeta1 + z * p.lambda_reg;
    let terminal_identity_residual = lp.system.state_norm(&identity)?;
    let terminal_miss = lp.system.state_norm(&(&w_t - &p.zeta1))?;
    let cost_terms = cost_functional(&w_t, &p.zeta1, &control, p.lambda_reg, lp.system)?;
    Ok(SteeringResult {
        trajectory,
        control,
        terminal_miss,
        picard_iterations: iterations,
        picard_residuals: residuals,
        cost: cost_terms.total,
        cost_terms,
        terminal_identity_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::{build_resolvent_table, TableRoute};
    use crate::MemoryKernel;

    fn setup(modes: usize, steps: usize) -> (SpectralSystem, ResolventTable, TimeGrid) {
        let kernel = MemoryKernel::new(1.0, 0.5, 0.5).unwrap();
        let system = SpectralSystem::new(modes, 2 * modes + 3, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let table = build_resolvent_table(&kernel, &system, grid.nodes(), TableRoute::MLSeries, 1e-16).unwrap();
        (system, table, grid)
    }

    fn problem(modes: usize, lambda: f64, f: Nonlinearity) -> SteeringProblem {
        SteeringProblem {
            zeta: DVector::from_fn(modes, |m, _| if m == 0 { 1.0 } else { 0.0 }),
            zeta1: DVector::from_fn(modes, |m, _| 1.0 / (m + 1) as f64),
            horizon: 1.0,
            lambda_reg: lambda,
            nonlinearity: f,
            duality_p: 2.0,
        }
    }

    #[test]
    fn linear_problem_converges_at_once() {
        let (system, table, grid) = setup(4, 64);
        let p = problem(4, 1e-3, Nonlinearity::Zero);
        let r = closed_loop_picard(&p, &system, &table, &ControlOperator::identity(4), &grid, 1e-10, 10).unwrap();
        assert_eq!(r.picard_iterations, 1);
        assert!(r.terminal_identity_residual <= 1e-8 * (1.0 + p.zeta1.norm()));
        assert!((r.cost - r.cost_terms.terminal - r.cost_terms.control).abs() <= 1e-15);
    }

    #[test]
    fn zero_problem_has_zero_cost() {
        let (system, table, grid) = setup(3, 32);
        let mut p = problem(3, 1e-3, Nonlinearity::Zero);
        p.zeta.fill(0.0);
        p.zeta1.fill(0.0);
        let r = closed_loop_picard(&p, &system, &table, &ControlOperator::identity(3), &grid, 1e-10, 10).unwrap();
        assert_eq!(r.control.energy, 0.0);
        assert_eq!(r.trajectory.sup_norm(), 0.0);
        assert_eq!(r.cost, 0.0);
    }

    #[test]
    fn semilinear_problem_contracts() {
        let (system, table, grid) = setup(8, 128);
        let p = problem(8, 1e-4, Nonlinearity::SineCosine { k0: 0.1, horizon: 1.0 });
        let r = closed_loop_picard(&p, &system, &table, &ControlOperator::identity(8), &grid, 1e-8, 50).unwrap();
        assert!(r.picard_iterations <= 50);
        assert!(r.picard_residuals.windows(2).skip(1).all(|w| w[1] <= w[0]));
        assert!(r.terminal_identity_residual <= 1e-6 * (1.0 + p.zeta1.norm()));
    }

    #[test]
    fn cost_terms() {
        let system = SpectralSystem::new(2, 9, 2.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let w = DVector::from_vec(vec![1.0, 2.0]);
        let zero = ControlSignal::zero(&grid, 2);
        assert_eq!(cost_functional(&w, &w, &zero, 0.5, &system).unwrap().total, 0.0);
        let u = ControlSignal::new(grid.clone(), vec![DVector::from_vec(vec![1.0, 1.0]); 5]).unwrap();
        assert!((cost_functional(&w, &w, &u, 0.5, &system).unwrap().total - 0.5 * u.energy).abs() < 1e-15);
    }

    #[test]
    fn invalid_problems_rejected() {
        let (system, table, grid) = setup(2, 8);
        let b = ControlOperator::identity(2);
        let mut p = problem(2, 0.0, Nonlinearity::Zero);
        assert!(closed_loop_picard(&p, &system, &table, &b, &grid, 1e-8, 5).is_err());
        p.lambda_reg = 1e-3;
        p.horizon = 2.0;
        assert!(matches!(closed_loop_picard(&p, &system, &table, &b, &grid, 1e-8, 5), Err(Error::GridIncompatible(_))));
    }
}
