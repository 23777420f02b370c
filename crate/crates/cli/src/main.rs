use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use memsteer_cli::{config_hash, emit_report, parse_config, run_scenario, Command, ScenarioConfig, Summary};

#[derive(Parser)]
#[command(name = "memsteer", version, about = "Steering experiments for the fractional memory heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Scenario file; a built-in default scenario is used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides `outputs.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
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

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::ResolventValidate => Command::ResolventValidate,
            Sub::Gramian => Command::Gramian,
            Sub::SteerLinear => Command::SteerLinear,
            Sub::SteerSemilinear => Command::SteerSemilinear,
            Sub::SweepLambda => Command::SweepLambda,
            Sub::RankCheck => Command::RankCheck,
            Sub::Criterion => Command::Criterion,
            Sub::Feasibility => Command::Feasibility,
            Sub::DecayReport => Command::DecayReport,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    Json,
    Both,
}

fn load(cli: &Cli) -> Result<ScenarioConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path).map_err(|e| e.to_string())?,
        None => ScenarioConfig::with_kernel(1.0, 0.5, 0.5),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.outputs.directory = out.display().to_string();
    }
    if let Some(f) = cli.format {
        cfg.outputs.formats = match f {
            Format::Csv => vec!["csv".into()],
            Format::Json => vec!["json".into()],
            Format::Both => vec!["csv".into(), "json".into()],
        };
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let command = Command::from(cli.command);
    let start = Instant::now();
    let out = match run_scenario(&cfg, command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    let summary = Summary::new(&cfg.id, command.name(), &out.rows, cfg.seed, &config_hash(&cfg), start.elapsed().as_secs_f64());
    let dir = PathBuf::from(&cfg.outputs.directory);
    if let Err(e) = emit_report(&out.rows, &out.artifacts, &summary, &cfg.outputs.formats, &dir) {
        eprintln!("error: writing reports to {}: {e}", dir.display());
        return ExitCode::from(3);
    }
    for row in &out.rows {
        println!("{:<5} {:<40} {:.6e} (tol {:.1e})", if row.pass { "ok" } else { "FAIL" }, row.metric, row.value, row.tol);
    }
    if summary.all_pass {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing: {}", summary.failing_metrics.join(", "));
        ExitCode::from(1)
    }
}
