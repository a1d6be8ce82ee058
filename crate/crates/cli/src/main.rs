use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vcge_cli::config::{load_config, ScenarioConfig};
use vcge_cli::scenarios::{run_benchmark, run_comparative, run_transition, run_verify, RunError};

/// Steady states of the VC-effort economy and their comparative statics.
#[derive(Debug, Parser)]
#[command(name = "vcge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the benchmark steady state.
    Solve(Common),
    /// Benchmark plus every perturbation, with the sign checks.
    Compare(Common),
    /// Feasibility-region boundaries at the benchmark.
    Region(Common),
    /// Path of the masses towards the benchmark steady state.
    Transition(Common),
    /// Oracle suite against the closed forms.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `section.key = value` file; omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis (overrides `grid.nz` and `grid.nc`).
    #[arg(long)]
    resolution: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, RunError> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(dir) = &self.out {
            config.out_dir = dir.clone();
        }
        if let Some(n) = self.resolution {
            config.grid.nz = n;
            config.grid.nc = n;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::Solve(c) => {
            let config = c.load()?;
            let s = run_benchmark(&config)?;
            println!(
                "w={} v={} H={} M={} Y/L={}",
                s.prices.w, s.prices.v, s.effort_supply, s.mass_e, s.labor_productivity
            );
            Ok(0)
        }
        Command::Compare(c) => {
            let config = c.load()?;
            let report = run_comparative(&config)?;
            for s in report.scenarios.iter().filter(|s| s.failed()) {
                println!("FAILED {}: {}", s.label, s.error.as_deref().unwrap_or(""));
            }
            for check in &report.checks {
                println!(
                    "{} {} {}: {} (expected {}, observed {})",
                    if check.pass() { "PASS" } else { "FAIL" },
                    check.proposition,
                    check.scenario,
                    check.claim,
                    check.expected,
                    check.observed
                );
            }
            Ok(report.exit_code())
        }
        Command::Region(c) => {
            let config = c.load()?;
            let grid = config.grid.build()?;
            let state =
                vcge_cli::scenarios::solve(&config.params, &grid, &config).map_err(|source| RunError::Solve {
                    label: "benchmark".to_string(),
                    source,
                })?;
            let path = vcge_cli::scenarios::emit_region_data(&state, &config)?;
            println!("{}", path.display());
            Ok(0)
        }
        Command::Transition(c) => {
            let config = c.load()?;
            let path = run_transition(&config)?;
            println!("{} periods written", path.len());
            Ok(0)
        }
        Command::Verify { common, seed } => {
            let mut config = common.load()?;
            if let Some(seed) = seed {
                config.verify.seed = seed;
            }
            let report = run_verify(&config)?;
            let failed = report.oracles.iter().filter(|r| !r.pass).count()
                + report.monte_carlo.iter().filter(|c| !c.pass()).count();
            println!(
                "{} oracle rows, {} Monte Carlo checks, {failed} failed",
                report.oracles.len(),
                report.monte_carlo.len()
            );
            Ok(if report.all_pass() { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
