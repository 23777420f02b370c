//! Subcommands mapped onto library operations.

use std::fmt;
use std::str::FromStr;

use memsteer::control::{
    adjoint_vanishing_test, approx_criterion, assemble_gramian, gramian_growth_check, closed_loop_picard, control_operator_matrix, feasibility_check,
    rank_condition, synthesize_control, target_offset, ControlOperator, FeasibilityInput, KernelQuadrature, Nonlinearity, SteeringProblem,
};
use memsteer::resolvent::{
    build_resolvent_table_with, decay_diagnostics, verify_resolvent_equation, QuadRule, ResolventTable, TableOptions, TableRoute,
};
use memsteer::volterra::TimeGrid;
use memsteer::{Error, MemoryKernel, SpectralSystem};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::report::{Artifact, ReportRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    ResolventValidate,
    Gramian,
    SteerLinear,
    SteerSemilinear,
    SweepLambda,
    RankCheck,
    Criterion,
    Feasibility,
    DecayReport,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::ResolventValidate,
        Command::Gramian,
        Command::SteerLinear,
        Command::SteerSemilinear,
        Command::SweepLambda,
        Command::RankCheck,
        Command::Criterion,
        Command::Feasibility,
        Command::DecayReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::ResolventValidate => "resolvent-validate",
            Command::Gramian => "gramian",
            Command::SteerLinear => "steer-linear",
            Command::SteerSemilinear => "steer-semilinear",
            Command::SweepLambda => "sweep-lambda",
            Command::RankCheck => "rank-check",
            Command::Criterion => "criterion",
            Command::Feasibility => "feasibility",
            Command::DecayReport => "decay-report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.iter().copied().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

/// Library failure with the scenario and command it happened in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub scenario: String,
    pub command: Command,
    pub source: Error,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "scenario `{}`, command `{}`: {}", self.scenario, self.command, self.source)
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub rows: Vec<ReportRow>,
    pub artifacts: Vec<Artifact>,
}

impl ScenarioOutput {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// SHA-256 of the canonical JSON form of the validated configuration.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    format!("{:x}", Sha256::digest(json.as_bytes()))
}

const IDENTITY_TOL: f64 = 1e-6;
const MONOTONE_SLACK_LINEAR: f64 = 1e-10;
const MONOTONE_SLACK_SEMILINEAR: f64 = 1e-8;

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    id: &'a str,
    kernel: MemoryKernel,
    system: SpectralSystem,
    grid: TimeGrid,
    b: ControlOperator,
    zeta: DVector<f64>,
    zeta1: DVector<f64>,
    nonlinearity: Nonlinearity,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig) -> memsteer::Result<Self> {
        let kernel = MemoryKernel::new(cfg.kernel.alpha, cfg.kernel.beta, cfg.kernel.nu)?;
        let system = SpectralSystem::new(cfg.system.modes, cfg.system.grid_points, cfg.system.p)?;
        let grid = TimeGrid::new(cfg.time.horizon, cfg.time.steps, cfg.time.kind())?;
        let mut b = control_operator_matrix(cfg.control.kind(), &system, &KernelQuadrature::default())?;
        if !cfg.control.killed_modes.is_empty() {
            b = b.with_zeroed_modes(&cfg.control.killed_modes)?;
        }
        let modes = cfg.system.modes;
        let zeta = cfg.problem.zeta.resolve(modes).map_err(Error::InvalidArgument)?;
        let zeta1 = cfg.problem.zeta1.resolve(modes).map_err(Error::InvalidArgument)?;
        let nonlinearity = cfg.nonlinearity_spec().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(Self { cfg, id: &cfg.id, kernel, system, grid, b, zeta, zeta1, nonlinearity })
    }

    fn table_options(&self) -> TableOptions {
        let mut o = TableOptions::default();
        o.series.tol = self.cfg.resolvent.tol;
        o.volterra_max_step = self.cfg.resolvent.volterra_step;
        o
    }

    fn table_at(&self, times: &[f64], route: TableRoute) -> memsteer::Result<ResolventTable> {
        build_resolvent_table_with(&self.kernel, &self.system, times, route, &self.table_options())
    }

    /// Table covering the grid nodes and every difference `t_k - t_j`.
    fn grid_table(&self) -> memsteer::Result<ResolventTable> {
        let nodes = self.grid.nodes();
        if self.grid.is_uniform() {
            return self.table_at(nodes, self.cfg.resolvent.table_route());
        }
        let mut times: Vec<f64> = (0..nodes.len()).flat_map(|k| (0..=k).map(move |j| nodes[k] - nodes[j])).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        self.table_at(&times, self.cfg.resolvent.table_route())
    }

    fn steering_problem(&self, lambda: f64, f: Nonlinearity) -> SteeringProblem {
        SteeringProblem { zeta: self.zeta.clone(), zeta1: self.zeta1.clone(), horizon: self.cfg.time.horizon, lambda_reg: lambda, nonlinearity: f, duality_p: self.system.p() }
    }
}

/// Runs one command; failing checks become failing rows, library errors are returned.
pub fn run_scenario(config: &ScenarioConfig, command: Command) -> Result<ScenarioOutput, RunError> {
    let wrap = |source: Error| RunError { scenario: config.id.clone(), command, source };
    let ctx = Context::new(config).map_err(wrap)?;
    let out = match command {
        Command::ResolventValidate => resolvent_validate(&ctx),
        Command::Gramian => gramian(&ctx),
        Command::SteerLinear => steer(&ctx, Nonlinearity::Zero, true),
        Command::SteerSemilinear => steer(&ctx, ctx.nonlinearity, true),
        Command::SweepLambda => steer(&ctx, ctx.nonlinearity, false),
        Command::RankCheck => rank_check(&ctx),
        Command::Criterion => criterion(&ctx),
        Command::Feasibility => feasibility(&ctx),
        Command::DecayReport => decay_report(&ctx),
    };
    out.map_err(wrap)
}

fn resolvent_validate(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let n = ctx.cfg.resolvent.validation_points;
    let horizon = ctx.cfg.time.horizon;
    let times: Vec<f64> = (0..n).map(|k| if k + 1 == n { horizon } else { horizon * k as f64 / (n - 1) as f64 }).collect();
    let ml = ctx.table_at(&times, TableRoute::MLSeries)?;
    let contour = ctx.table_at(&times, TableRoute::Contour)?;
    let volterra = ctx.table_at(&times, TableRoute::Volterra)?;
    let mut rows = Vec::new();
    for m in 0..ctx.system.modes() {
        let mut rel = 0.0_f64;
        let mut abs = 0.0_f64;
        for k in 0..times.len() {
            let (a, c, v) = (ml.values[m][k], contour.values[m][k], volterra.values[m][k]);
            rel = rel.max((a - c).abs() / c.abs().max(f64::MIN_POSITIVE));
            abs = abs.max((v - a).abs());
        }
        rows.push(ReportRow::upper(id, format!("ml_vs_contour_rel_m{}", m + 1), rel, 1e-6));
        rows.push(ReportRow::upper(id, format!("volterra_vs_ml_abs_m{}", m + 1), abs, 1e-4));
    }
    for (name, t) in [("mlseries", &ml), ("contour", &contour), ("volterra", &volterra)] {
        rows.push(ReportRow::upper(id, format!("sup_norm_{name}"), t.sup_norm, 1.0 + 1e-8));
    }
    let eq_times: Vec<f64> = (0..=128).map(|k| horizon * k as f64 / 128.0).collect();
    let eq_table = ctx.table_at(&eq_times, TableRoute::Contour)?;
    for m in 0..ctx.system.modes().min(3) {
        let r = verify_resolvent_equation(&eq_table, m, QuadRule::ProductSimpson)?;
        rows.push(ReportRow::upper(id, format!("resolvent_equation_residual_m{}", m + 1), r, 1e-4));
    }
    let artifacts = vec![
        Artifact::new("resolvent_mlseries.csv", ml.to_csv()?),
        Artifact::new("resolvent_contour.csv", contour.to_csv()?),
        Artifact::new("resolvent_volterra.csv", volterra.to_csv()?),
    ];
    Ok(ScenarioOutput { rows, artifacts })
}

fn json<T: serde::Serialize>(v: &T) -> memsteer::Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
}

fn gramian(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let table = ctx.grid_table()?;
    let g = assemble_gramian(&table, &ctx.b, &ctx.grid)?;
    let asym = (&g.matrix - g.matrix.transpose()).amax();
    let mut rows = vec![
        ReportRow::upper(id, "gramian_asymmetry", asym, 1e-12),
        ReportRow::lower(id, "gramian_min_eigenvalue", g.min_eigenvalue, -1e-10),
        ReportRow::info(id, "gramian_norm", g.norm()),
    ];
    match gramian_growth_check(&table, &ctx.b, &ctx.grid, &g) {
        Ok(f) => rows.push(ReportRow::info(id, "l_tilde", f.l_tilde)),
        Err(Error::NotApplicable(_)) => rows.push(ReportRow::info(id, "l_tilde", f64::INFINITY)),
        Err(e) => return Err(e),
    }
    Ok(ScenarioOutput { rows, artifacts: vec![Artifact::new("gramian.json", json(&g)?)] })
}

fn steer(ctx: &Context<'_>, f: Nonlinearity, full: bool) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let table = ctx.grid_table()?;
    let c = &ctx.cfg.control;
    let scale = ctx.system.state_norm(&ctx.zeta1)?;
    let linear = f.is_zero();
    let miss_tol = ctx.cfg.problem.miss_tolerance.unwrap_or(if linear { 1e-3 } else { 5e-3 });
    let slack = if linear { MONOTONE_SLACK_LINEAR } else { MONOTONE_SLACK_SEMILINEAR };
    let mut rows = Vec::new();
    let mut sweep = String::from("lambda,terminal_miss,cost,energy,iters\n");
    let mut misses = Vec::new();
    let mut last = None;
    for &lambda in &c.lambda_sequence {
        let problem = ctx.steering_problem(lambda, f);
        match closed_loop_picard(&problem, &ctx.system, &table, &ctx.b, &ctx.grid, c.picard_tol, c.max_iter) {
            Ok(r) => {
                let rel = if scale > 0.0 { r.terminal_miss / scale } else { r.terminal_miss };
                sweep.push_str(&format!("{lambda:.16e},{:.16e},{:.16e},{:.16e},{}\n", r.terminal_miss, r.cost, r.control.energy, r.picard_iterations));
                misses.push(rel);
                rows.push(ReportRow::info(id, format!("relative_miss_lambda={lambda:e}"), rel));
                if full {
                    rows.push(ReportRow::upper(id, format!("terminal_identity_lambda={lambda:e}"), r.terminal_identity_residual, IDENTITY_TOL * (1.0 + scale)));
                    rows.push(ReportRow::upper(id, format!("picard_iterations_lambda={lambda:e}"), r.picard_iterations as f64, c.max_iter as f64));
                }
                last = Some(r);
            }
            Err(Error::PicardNotConverged { iterations, update }) => {
                rows.push(ReportRow::flag(id, format!("picard_not_converged_lambda={lambda:e}"), update, c.picard_tol, false));
                sweep.push_str(&format!("{lambda:.16e},nan,nan,nan,{iterations}\n"));
                misses.push(f64::INFINITY);
            }
            Err(e) => return Err(e),
        }
    }
    let increase = misses.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max);
    rows.push(ReportRow::upper(id, "miss_increase_across_sweep", if increase.is_nan() { f64::INFINITY } else { increase }, slack));
    rows.push(ReportRow::upper(id, "relative_miss_final", misses.last().copied().unwrap_or(f64::INFINITY), miss_tol));
    let mut artifacts = vec![Artifact::new("sweep.csv", sweep)];
    if let (true, Some(r)) = (full, last) {
        artifacts.push(Artifact::new("trajectory.csv", r.trajectory.to_csv()?));
        artifacts.push(Artifact::new("steering.json", json(&r)?));
    }
    Ok(ScenarioOutput { rows, artifacts })
}

fn rank_check(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let r = rank_condition(ctx.system.eigenvalues(), &ctx.b.matrix)?;
    let m = ctx.system.modes();
    let rows = vec![ReportRow::info(id, "rank", r.rank as f64), ReportRow::upper(id, "rank_deficit", (m - r.rank) as f64, 0.0)];
    let mut sv = String::from("index,singular_value\n");
    for (i, s) in r.singular_values.iter().enumerate() {
        sv.push_str(&format!("{i},{s:.16e}\n"));
    }
    Ok(ScenarioOutput { rows, artifacts: vec![Artifact::new("rank.csv", sv), Artifact::new("rank.json", json(&r)?)] })
}

fn criterion(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let table = ctx.grid_table()?;
    let g = assemble_gramian(&table, &ctx.b, &ctx.grid)?;
    let m = ctx.system.modes();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut samples: Vec<DVector<f64>> = (0..m).map(|i| DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 })).collect();
    samples.extend((0..ctx.cfg.control.criterion_samples).map(|_| DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0))));
    let t = approx_criterion(&g, &ctx.cfg.control.lambda_sequence, &samples, &ctx.system)?;
    let mut rows: Vec<ReportRow> = t.rows.iter().map(|(l, c)| ReportRow::info(id, format!("criterion_lambda={l:e}"), *c)).collect();
    let increase = t.rows.windows(2).map(|w| w[1].1 - w[0].1).fold(0.0_f64, f64::max);
    rows.push(ReportRow::upper(id, "criterion_increase", increase, memsteer::control::criteria::MONOTONE_SLACK));
    rows.push(ReportRow::upper(id, "criterion_final", t.rows.last().map_or(f64::INFINITY, |r| r.1), memsteer::control::criteria::CRITERION_THRESHOLD));
    for i in 0..m {
        let e = DVector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
        let a = adjoint_vanishing_test(&table, &ctx.b, &e, &ctx.grid, 1e-12)?;
        rows.push(ReportRow::info(id, format!("adjoint_quadratic_form_e{}", i + 1), a.quadratic_form));
    }
    Ok(ScenarioOutput { rows, artifacts: vec![Artifact::new("criterion.csv", t.to_csv()), Artifact::new("criterion.json", json(&t)?)] })
}

fn feasibility(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let table = ctx.grid_table()?;
    let g = assemble_gramian(&table, &ctx.b, &ctx.grid)?;
    let l_tilde = match gramian_growth_check(&table, &ctx.b, &ctx.grid, &g) {
        Ok(f) => f.l_tilde,
        Err(Error::NotApplicable(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let lambda = *ctx.cfg.control.lambda_sequence.last().expect("validated nonempty");
    let k = target_offset(&table, &ctx.zeta, &ctx.zeta1, None, &ctx.grid)?;
    let u = synthesize_control(&table, &ctx.b, &g, lambda, &k, &ctx.grid, &ctx.system)?.control;
    let input = FeasibilityInput {
        n_bound: table.sup_norm,
        m_b: ctx.b.operator_norm,
        horizon: ctx.cfg.time.horizon,
        zeta_norm: ctx.system.state_norm(&ctx.zeta)?,
        zeta1_norm: ctx.system.state_norm(&ctx.zeta1)?,
        control_norm: u.energy.sqrt(),
        l_tilde: if l_tilde.is_finite() { l_tilde } else { 0.0 },
        nonlinearity: ctx.nonlinearity,
        p: ctx.system.p(),
    };
    let r = feasibility_check(&input)?;
    let radius_row = |name: &str, radius: Option<f64>| ReportRow::flag(id, name, radius.unwrap_or(f64::INFINITY), f64::INFINITY, radius.is_some());
    let mut rows = vec![
        ReportRow::info(id, "n_bound", input.n_bound),
        ReportRow::info(id, "l_tilde", l_tilde),
        ReportRow::lower(id, "l_tilde_finite", if l_tilde.is_finite() { 1.0 } else { 0.0 }, 1.0),
        ReportRow::info(id, "gamma_l1_intercept", r.gamma.intercept),
        ReportRow::info(id, "gamma_l1_slope", r.gamma.slope),
        radius_row("existence_radius", r.existence_radius),
        radius_row("steering_radius", r.steering_radius),
        ReportRow::info(id, "decay_radius", r.decay_radius),
    ];
    if let Some(d) = r.decay {
        rows.push(ReportRow::upper(id, "smallness_lhs", d.smallness_lhs, 0.5));
        rows.push(ReportRow::info(id, "smallness_exact_lhs", d.smallness_exact_lhs));
        rows.push(ReportRow::info(id, "growth_integral_stated_per_unit_r", d.growth_integral_stated));
        rows.push(ReportRow::info(id, "growth_integral_exact_per_unit_r", d.growth_integral_exact));
        rows.push(ReportRow::upper(id, "growth_ratio_minus_mu_squared", d.ratio - d.mu * d.mu, 1e-12 * d.mu * d.mu));
    }
    Ok(ScenarioOutput { rows, artifacts: vec![Artifact::new("feasibility.json", json(&r)?)] })
}

fn decay_report(ctx: &Context<'_>) -> memsteer::Result<ScenarioOutput> {
    let id = ctx.id;
    let table = ctx.table_at(ctx.grid.nodes(), ctx.cfg.resolvent.table_route())?;
    let report = decay_diagnostics(&table, &ctx.kernel, &ctx.system)?;
    let violations = report.bound_rows.iter().filter(|r| r.violation).count();
    let mut rows = vec![ReportRow::info(id, "bound_violations", violations as f64), ReportRow::upper(id, "sup_norm", table.sup_norm, 1.0 + 1e-8)];
    for d in &report.derivative_rows {
        let metric = format!("derivative_deviation_m{}", d.m);
        rows.push(if d.m == 1 { ReportRow::upper(id, metric, d.relative_deviation, 0.05) } else { ReportRow::info(id, metric, d.relative_deviation) });
    }
    let mut bound = String::from("m,t,lhs,rhs,violation\n");
    for r in &report.bound_rows {
        bound.push_str(&format!("{},{:.16e},{:.16e},{:.16e},{}\n", r.m, r.t, r.lhs, r.rhs, r.violation));
    }
    let mut deriv = String::from("m,estimate,target,relative_deviation\n");
    for d in &report.derivative_rows {
        deriv.push_str(&format!("{},{:.16e},{:.16e},{:.16e}\n", d.m, d.estimate, d.target, d.relative_deviation));
    }
    Ok(ScenarioOutput { rows, artifacts: vec![Artifact::new("decay_bound.csv", bound), Artifact::new("decay_derivative.csv", deriv), Artifact::new("decay.json", json(&report)?)] })
}
