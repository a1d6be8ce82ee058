//! The runs behind each subcommand and the files they leave behind.
//!
//! Every run writes `effective_config.txt` next to its tables. Files are
//! written only after all numbers are in hand, one directory at a time.

use std::path::{Path, PathBuf};

use log::{info, warn};
use thiserror::Error;
use vcge_core::dynamics::{geometric_path, half_life, simulate_transition, Masses, TransitionPath};
use vcge_core::equilibrium::{aggregate_report, aggregates};
use vcge_core::model::{bank_policy, effort_price_ratio, vc_policy, Mode};
use vcge_core::oracle::{
    fd_sign_report, monte_carlo, oracle_bank_effort, oracle_vc_efforts, Lattice, McEstimate, OracleReport, Search,
};
use vcge_core::{
    financing_choice, solve_steady_state, EquilibriumState, FirmType, GridError, ModelParams, ParamError, SolveError,
    SolveMode, TypeGrid,
};

use crate::compare::{proposition_checks, SignCheck, Snapshot};
use crate::config::{ConfigError, Emission, Perturbation, ScenarioConfig};
use crate::output::{write_file, Cell, Table, WriteError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("type grid: {0}")]
    Grid(#[from] GridError),
    #[error("scenario `{label}`: {source}")]
    Params {
        label: String,
        #[source]
        source: ParamError,
    },
    #[error("solver failed for `{label}`: {source}")]
    Solve {
        label: String,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Write(#[from] WriteError),
    #[error("comparative run needs at least one perturbation")]
    NoPerturbations,
}

impl RunError {
    /// 2 for solver failures, 1 for everything that stops a run before
    /// or after solving.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Solve { .. } => 2,
            _ => 1,
        }
    }
}

pub const BENCHMARK_LABEL: &str = "benchmark";

pub fn solve(params: &ModelParams, grid: &TypeGrid, config: &ScenarioConfig) -> Result<EquilibriumState, SolveError> {
    solve_steady_state(
        params,
        grid,
        SolveMode::FreeEntry {
            mass_e: config.start.mass_e,
            effort_supply: config.start.effort_supply,
        },
        &config.controls,
    )
}

fn solve_labeled(
    label: &str,
    params: &ModelParams,
    grid: &TypeGrid,
    config: &ScenarioConfig,
) -> Result<EquilibriumState, RunError> {
    let state = solve(params, grid, config).map_err(|source| RunError::Solve {
        label: label.to_string(),
        source,
    })?;
    info!(
        "{label}: w={} v={} H={} M={} after {} iterations",
        state.prices.w, state.prices.v, state.effort_supply, state.mass_e, state.iterations
    );
    Ok(state)
}

fn write_config(dir: &Path, config: &ScenarioConfig) -> Result<(), RunError> {
    write_file(dir, "effective_config.txt", &config.to_text())?;
    Ok(())
}

pub fn summary_table(state: &EquilibriumState) -> Table {
    let mut t = Table::new(["quantity", "value"]);
    // a converged state always has a report; an unconverged one is never emitted
    if let Ok(report) = aggregate_report(state) {
        for row in report.benchmark.iter().chain(&report.diagnostics) {
            t.push(vec![row.label.into(), row.value.into()]);
        }
    }
    t
}

pub fn policy_table(snapshot: &Snapshot) -> Table {
    let mut t = Table::new(["z", "c", "mode", "f", "h", "l", "S_e", "S_v"]);
    for r in &snapshot.policy {
        t.push(vec![
            r.z.into(),
            r.c.into(),
            r.mode.as_str().into(),
            r.f.into(),
            r.h.into(),
            r.l.into(),
            r.s_e.into(),
            r.s_v.into(),
        ]);
    }
    t
}

/// One row per `c`: analytic boundaries, then where the mode first
/// switches on along the `z` grid.
pub fn region_table(snapshot: &Snapshot) -> Table {
    let mut t = Table::new([
        "c",
        "z_s",
        "z_vc",
        "advantage",
        "vc_row",
        "z_first_funded",
        "mode_first_funded",
        "n_bank",
        "n_vc",
    ]);
    let nz = if snapshot.thresholds.is_empty() {
        0
    } else {
        snapshot.policy.len() / snapshot.thresholds.len()
    };
    for (i, th) in snapshot.thresholds.iter().enumerate() {
        let row = &snapshot.policy[i * nz..(i + 1) * nz];
        let first = row.iter().find(|p| p.mode != Mode::NoEntry);
        let count = |m| row.iter().filter(|p| p.mode == m).count();
        t.push(vec![
            th.c.into(),
            th.z_bank.into(),
            th.z_vc.into(),
            th.advantage.into(),
            th.z_vc.is_finite().into(),
            first.map(|p| p.z).into(),
            first.map_or("none", |p| p.mode.as_str()).into(),
            count(Mode::Bank).into(),
            count(Mode::Vc).into(),
        ]);
    }
    t
}

fn write_scenario(dir: &Path, state: &EquilibriumState, snapshot: &Snapshot, emit: Emission) -> Result<(), RunError> {
    if emit.summary {
        write_file(dir, "summary.csv", &summary_table(state).render())?;
    }
    if emit.policy {
        write_file(dir, "policy.csv", &policy_table(snapshot).render())?;
    }
    if emit.region {
        write_file(dir, "region.csv", &region_table(snapshot).render())?;
    }
    Ok(())
}

/// Solves the configured economy and writes its summary, policy and
/// region tables into the output directory.
pub fn run_benchmark(config: &ScenarioConfig) -> Result<EquilibriumState, RunError> {
    let grid = config.grid.build()?;
    let state = solve_labeled(BENCHMARK_LABEL, &config.params, &grid, config)?;
    let snapshot = Snapshot::new(BENCHMARK_LABEL, &state, &grid, &config.params);
    write_config(&config.out_dir, config)?;
    write_scenario(&config.out_dir, &state, &snapshot, config.emit)?;
    Ok(state)
}

/// Writes `region.csv` for a solved state of the configured economy.
pub fn emit_region_data(state: &EquilibriumState, config: &ScenarioConfig) -> Result<PathBuf, RunError> {
    let grid = config.grid.build()?;
    let snapshot = Snapshot::new(BENCHMARK_LABEL, state, &grid, &config.params);
    Ok(write_file(
        &config.out_dir,
        "region.csv",
        &region_table(&snapshot).render(),
    )?)
}

/// Change in the per-type policy between two scenarios at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyDelta {
    pub z: f64,
    pub c: f64,
    pub mode_base: Mode,
    pub mode_alt: Mode,
    pub df: f64,
    pub dh: f64,
    pub dl: f64,
}

pub fn policy_deltas(base: &Snapshot, alt: &Snapshot) -> Vec<PolicyDelta> {
    base.policy
        .iter()
        .zip(&alt.policy)
        .map(|(a, b)| PolicyDelta {
            z: a.z,
            c: a.c,
            mode_base: a.mode,
            mode_alt: b.mode,
            df: b.f - a.f,
            dh: b.h - a.h,
            dl: b.l - a.l,
        })
        .collect()
}

fn delta_table(deltas: &[PolicyDelta]) -> Table {
    let mut t = Table::new(["z", "c", "mode_base", "mode_alt", "df", "dh", "dl"]);
    for d in deltas {
        t.push(vec![
            d.z.into(),
            d.c.into(),
            d.mode_base.as_str().into(),
            d.mode_alt.as_str().into(),
            d.df.into(),
            d.dh.into(),
            d.dl.into(),
        ]);
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub label: String,
    /// `None` for the benchmark.
    pub perturbation: Option<Perturbation>,
    pub params: ModelParams,
    /// `None` when the solver failed; see `error`.
    pub state: Option<EquilibriumState>,
    pub error: Option<String>,
}

impl ScenarioSummary {
    pub fn failed(&self) -> bool {
        self.state.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeReport {
    /// Benchmark first, then the perturbations in config order.
    pub scenarios: Vec<ScenarioSummary>,
    pub checks: Vec<SignCheck>,
    pub deltas: Vec<(String, Vec<PolicyDelta>)>,
}

impl ComparativeReport {
    pub fn any_failed_scenario(&self) -> bool {
        self.scenarios.iter().any(ScenarioSummary::failed)
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(SignCheck::pass)
    }

    /// 0 when everything solved and every check holds, 2 if a scenario
    /// failed to solve, 3 if a sign check failed.
    pub fn exit_code(&self) -> i32 {
        if self.any_failed_scenario() {
            2
        } else if !self.all_checks_pass() {
            3
        } else {
            0
        }
    }
}

fn column_label(s: &ScenarioSummary) -> String {
    match &s.perturbation {
        Some(p) => format!("{}({}={:?})", s.label, p.param, p.value),
        None => s.label.clone(),
    }
}

pub fn comparison_table(scenarios: &[ScenarioSummary]) -> Table {
    let mut t = Table::new(std::iter::once("quantity".to_string()).chain(scenarios.iter().map(column_label)));
    type Getter = fn(&EquilibriumState) -> f64;
    let rows: [(&str, Getter); 5] = [
        ("w", |s| s.prices.w),
        ("v", |s| s.prices.v),
        ("H", |s| s.effort_supply),
        ("M", |s| s.mass_e),
        ("Y/L", |s| s.labor_productivity),
    ];
    for (name, get) in rows {
        let mut row = vec![Cell::from(name)];
        row.extend(scenarios.iter().map(|s| s.state.as_ref().map(get).into()));
        t.push(row);
    }
    t
}

fn scenario_table(base: &ModelParams, scenarios: &[ScenarioSummary]) -> Table {
    let mut t = Table::new([
        "label",
        "param",
        "base_value",
        "value",
        "converged",
        "iterations",
        "error",
    ]);
    for s in scenarios {
        let (param, old, new) = match &s.perturbation {
            Some(p) => (p.param.as_str(), base.get(&p.param), Some(p.value)),
            None => ("", None, None),
        };
        t.push(vec![
            s.label.as_str().into(),
            param.into(),
            old.into(),
            new.into(),
            (!s.failed()).into(),
            s.state.as_ref().map_or(Cell::Blank, |x| x.iterations.into()),
            s.error.clone().map_or(Cell::Blank, Cell::Text),
        ]);
    }
    t
}

pub fn checks_table(checks: &[SignCheck]) -> Table {
    let mut t = Table::new([
        "proposition",
        "baseline",
        "scenario",
        "claim",
        "expected",
        "observed",
        "pass",
    ]);
    for c in checks {
        t.push(vec![
            c.proposition.into(),
            c.baseline.as_str().into(),
            c.scenario.as_str().into(),
            c.claim.into(),
            c.expected.as_str().into(),
            c.observed.as_str().into(),
            c.pass().into(),
        ]);
    }
    t
}

/// Solves the benchmark and every perturbed economy, runs the sign checks
/// and writes the comparison. A perturbed scenario that fails to solve is
/// flagged in the report and in `scenarios.csv`; the others are still
/// written. A benchmark failure is an error.
pub fn run_comparative(config: &ScenarioConfig) -> Result<ComparativeReport, RunError> {
    if config.perturbations.is_empty() {
        return Err(RunError::NoPerturbations);
    }
    let grid = config.grid.build()?;
    let perturbed = config
        .perturbations
        .iter()
        .map(|p| {
            p.apply(&config.params).map_err(|source| RunError::Params {
                label: p.label.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    // independent solver instances; results are joined in config order
    let (base, alts) = std::thread::scope(|s| {
        let handles: Vec<_> = perturbed
            .iter()
            .map(|params| s.spawn(|| solve(params, &grid, config)))
            .collect();
        let base = solve_labeled(BENCHMARK_LABEL, &config.params, &grid, config);
        let alts: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect();
        (base, alts)
    });
    let base = base?;
    let base_snap = Snapshot::new(BENCHMARK_LABEL, &base, &grid, &config.params);

    let mut scenarios = vec![ScenarioSummary {
        label: BENCHMARK_LABEL.to_string(),
        perturbation: None,
        params: config.params,
        state: Some(base.clone()),
        error: None,
    }];
    let mut snaps = Vec::new();
    let mut checks = Vec::new();
    let mut deltas = Vec::new();
    for ((pert, params), result) in config.perturbations.iter().zip(&perturbed).zip(alts) {
        match result {
            Ok(state) => {
                info!(
                    "{}: w={} v={} H={} M={}",
                    pert.label, state.prices.w, state.prices.v, state.effort_supply, state.mass_e
                );
                let snap = Snapshot::new(&pert.label, &state, &grid, params);
                checks.extend(proposition_checks(&base_snap, &snap, &pert.param));
                deltas.push((pert.label.clone(), policy_deltas(&base_snap, &snap)));
                scenarios.push(ScenarioSummary {
                    label: pert.label.clone(),
                    perturbation: Some(pert.clone()),
                    params: *params,
                    state: Some(state.clone()),
                    error: None,
                });
                snaps.push((state, snap));
            }
            Err(e) => {
                warn!("{} failed to solve: {e}", pert.label);
                scenarios.push(ScenarioSummary {
                    label: pert.label.clone(),
                    perturbation: Some(pert.clone()),
                    params: *params,
                    state: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let out = &config.out_dir;
    write_config(out, config)?;
    write_file(out, "comparison.csv", &comparison_table(&scenarios).render())?;
    write_file(
        out,
        "scenarios.csv",
        &scenario_table(&config.params, &scenarios).render(),
    )?;
    write_file(out, "checks.csv", &checks_table(&checks).render())?;
    write_scenario(&out.join(BENCHMARK_LABEL), &base, &base_snap, config.emit)?;
    for ((state, snap), (label, d)) in snaps.iter().zip(&deltas) {
        let dir = out.join(label);
        write_scenario(&dir, state, snap, config.emit)?;
        if config.emit.policy {
            write_file(&dir, "policy_delta.csv", &delta_table(d).render())?;
        }
    }
    Ok(ComparativeReport {
        scenarios,
        checks,
        deltas,
    })
}

/// Transition from the configured initial masses to the benchmark steady
/// state, with entrant flows held at their steady-state levels.
pub fn run_transition(config: &ScenarioConfig) -> Result<TransitionPath, RunError> {
    let grid = config.grid.build()?;
    let state = solve_labeled(BENCHMARK_LABEL, &config.params, &grid, config)?;
    let p = &config.params;
    let spec = config.transition;
    let initial = Masses {
        mass_e: spec.mass_e0,
        effort_supply: spec.effort0,
    };
    let target = Masses {
        mass_e: state.mass_e,
        effort_supply: state.effort_supply,
    };
    let path = simulate_transition(initial, target, spec.periods, p);
    let mut t = Table::new(["t", "M", "H", "m_e", "m_v", "M_closed_form", "H_closed_form"]);
    for k in 0..path.len() {
        t.push(vec![
            path.t[k].into(),
            path.mass_e[k].into(),
            path.effort_supply[k].into(),
            path.entrants_e[k].into(),
            path.entrants_v[k].into(),
            geometric_path(initial.mass_e, target.mass_e, p.s_e, k).into(),
            geometric_path(initial.effort_supply, target.effort_supply, p.s_v, k).into(),
        ]);
    }
    info!(
        "half-lives: M {} periods, H {} periods",
        half_life(p.s_e),
        half_life(p.s_v)
    );
    write_config(&config.out_dir, config)?;
    write_file(&config.out_dir, "transition.csv", &t.render())?;
    Ok(path)
}

/// Tolerance of the effort oracles.
pub const ORACLE_TOL: f64 = 1e-3;
/// Standard errors allowed between grid and Monte Carlo integrals.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct McCheck {
    pub quantity: &'static str,
    pub grid: f64,
    pub estimate: McEstimate,
}

impl McCheck {
    pub fn pass(&self) -> bool {
        self.estimate.z_score(self.grid) <= MC_SIGMAS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub oracles: Vec<OracleReport>,
    pub monte_carlo: Vec<McCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.oracles.iter().all(|r| r.pass) && self.monte_carlo.iter().all(McCheck::pass)
    }
}

/// Closed-form efforts against brute-force maximization on the
/// configured `(z, c)` lattice, at the benchmark prices.
pub fn effort_oracles(params: &ModelParams, state: &EquilibriumState, lattice: &Lattice) -> Vec<OracleReport> {
    let prices = state.prices;
    let mut out = Vec::new();
    let search = Search {
        refinements: 7,
        ..Search::default()
    };
    for &z in &lattice.z {
        for &c in &lattice.c {
            let t = FirmType { z, c };
            let at = format!("z={z} c={c}");
            let bank = bank_policy(t, prices.w, params);
            match oracle_bank_effort(t, prices.w, params, search) {
                Ok(f) => out.push(OracleReport::value(format!("bank f at {at}"), bank.f, f, ORACLE_TOL)),
                Err(e) => out.push(failed_oracle(format!("bank f at {at}: {e}"), bank.f)),
            }
            let vc = vc_policy(t, prices, bank.value, params);
            let ratio = effort_price_ratio(c, prices.v, params).powf(params.sigma);
            match oracle_vc_efforts(t, prices, params, bank.value, search) {
                Ok((f, h)) => {
                    out.push(OracleReport::value(format!("vc h at {at}"), vc.h, h, ORACLE_TOL));
                    out.push(OracleReport::value(format!("vc f at {at}"), vc.f, f, ORACLE_TOL));
                    out.push(OracleReport::value(format!("vc f/h at {at}"), ratio, f / h, ORACLE_TOL));
                }
                Err(e) => out.push(failed_oracle(format!("vc efforts at {at}: {e}"), vc.h)),
            }
        }
    }
    out
}

fn failed_oracle(case: String, closed_form: f64) -> OracleReport {
    OracleReport {
        case,
        closed_form,
        oracle: f64::NAN,
        rel_error: f64::INFINITY,
        tolerance: ORACLE_TOL,
        pass: false,
        advisory: false,
    }
}

/// Grid integrals of labor and VC-effort demand per entrant against a
/// seeded Monte Carlo estimate.
pub fn quadrature_checks(
    params: &ModelParams,
    state: &EquilibriumState,
    grid: &TypeGrid,
    draws: usize,
    seed: u64,
) -> Vec<McCheck> {
    let prices = state.prices;
    let agg = aggregates(prices, grid, params);
    let labor = monte_carlo(grid, |t| financing_choice(t, prices, params).l, draws, seed);
    let effort = monte_carlo(
        grid,
        |t| {
            let m = financing_choice(t, prices, params);
            if m.mode == Mode::Vc {
                m.h
            } else {
                0.0
            }
        },
        draws,
        seed.wrapping_add(1),
    );
    vec![
        McCheck {
            quantity: "labor",
            grid: agg.labor,
            estimate: labor,
        },
        McCheck {
            quantity: "effort",
            grid: agg.effort,
            estimate: effort,
        },
    ]
}

/// Runs the oracle suite: effort oracles, derivative signs and the Monte
/// Carlo quadrature check, writing `oracle.csv` and `monte_carlo.csv`.
pub fn run_verify(config: &ScenarioConfig) -> Result<VerifyReport, RunError> {
    let grid = config.grid.build()?;
    let p = &config.params;
    let state = solve_labeled(BENCHMARK_LABEL, p, &grid, config)?;
    let (zs, cs) = (grid.z.support(), grid.c.support());
    let v = state.prices.v;
    let n = config.verify.lattice;
    let lattice = Lattice::uniform(n, (zs.lo, zs.hi), (cs.lo, cs.hi), (0.5 * v, 2.0 * v));
    let mut oracles = effort_oracles(p, &state, &lattice);
    oracles.extend(fd_sign_report(p, state.prices.w, &lattice));
    let monte_carlo = quadrature_checks(p, &state, &grid, config.verify.draws, config.verify.seed);

    let mut t = Table::new([
        "case",
        "closed_form",
        "oracle",
        "rel_error",
        "tolerance",
        "pass",
        "advisory",
    ]);
    for r in &oracles {
        t.push(vec![
            r.case.as_str().into(),
            r.closed_form.into(),
            r.oracle.into(),
            r.rel_error.into(),
            r.tolerance.into(),
            r.pass.into(),
            r.advisory.into(),
        ]);
    }
    let mut m = Table::new([
        "quantity",
        "grid",
        "mc_mean",
        "mc_std_error",
        "draws",
        "z_score",
        "pass",
    ]);
    for c in &monte_carlo {
        m.push(vec![
            c.quantity.into(),
            c.grid.into(),
            c.estimate.mean.into(),
            c.estimate.std_error.into(),
            c.estimate.draws.into(),
            c.estimate.z_score(c.grid).into(),
            c.pass().into(),
        ]);
    }
    write_config(&config.out_dir, config)?;
    write_file(&config.out_dir, "oracle.csv", &t.render())?;
    write_file(&config.out_dir, "monte_carlo.csv", &m.render())?;
    Ok(VerifyReport { oracles, monte_carlo })
}
