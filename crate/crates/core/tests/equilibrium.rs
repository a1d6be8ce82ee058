use vcge_core::equilibrium::{aggregate_report, effort_demand, labor_demand, BENCHMARK_LABELS};
use vcge_core::{solve_steady_state, Controls, EquilibriumState, ModelParams, Prices, SolveError, SolveMode, TypeGrid};

fn free(p: &ModelParams, grid: &TypeGrid) -> Result<EquilibriumState, SolveError> {
    solve_steady_state(
        p,
        grid,
        SolveMode::FreeEntry {
            mass_e: 3.0,
            effort_supply: 1.0,
        },
        &Controls::default(),
    )
}

fn check_identities(s: &EquilibriumState, p: &ModelParams) {
    assert!(s.converged);
    assert!((s.labor_productivity - s.prices.w / p.beta).abs() <= 1e-10);
    assert!((s.entrants_e - (1.0 - p.s_e) * s.mass_e / p.epsilon).abs() <= 1e-10);
    assert!((s.entrants_v - (1.0 - p.s_v) * s.effort_supply).abs() <= 1e-10);
    assert!(s.residuals.labor.abs() <= 1e-8 && s.residuals.effort.abs() <= 1e-8);
    if s.free_entry {
        assert!(s.residuals.entry_e.abs() <= 1e-6 && s.residuals.entry_v.abs() <= 1e-6);
    }
}

#[test]
fn benchmark_satisfies_identities() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(101).unwrap();
    let s = free(&p, &grid).unwrap();
    check_identities(&s, &p);
    let report = aggregate_report(&s).unwrap();
    let labels: Vec<_> = report.benchmark.iter().map(|r| r.label).collect();
    assert_eq!(labels, BENCHMARK_LABELS);
}

#[test]
fn experiments_satisfy_identities() {
    let base = ModelParams::default();
    let grid = TypeGrid::default_uniform(41).unwrap();
    for (name, value) in [("I", 0.8), ("r", 0.02), ("kappa_v", 0.5)] {
        let p = base.with(name, value).unwrap();
        check_identities(&free(&p, &grid).unwrap(), &p);
    }
}

#[test]
fn fixed_supply_reproduces_free_entry_prices() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(61).unwrap();
    let s = free(&p, &grid).unwrap();
    let fixed = solve_steady_state(
        &p,
        &grid,
        SolveMode::FixedSupply {
            mass_e: s.mass_e,
            effort_supply: s.effort_supply,
        },
        &Controls::default(),
    )
    .unwrap();
    check_identities(&fixed, &p);
    assert!((fixed.prices.w / s.prices.w - 1.0).abs() <= 1e-8);
    assert!((fixed.prices.v / s.prices.v - 1.0).abs() <= 1e-8);
}

#[test]
fn solve_is_deterministic() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(51).unwrap();
    let a = free(&p, &grid).unwrap();
    let b = free(&p, &grid).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.prices.w.to_bits(), b.prices.w.to_bits());
}

#[test]
fn demands_fall_in_own_price() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(51).unwrap();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for k in 0..10 {
        let x = 0.8 + 0.1 * k as f64;
        let l = labor_demand(Prices { w: x, v: 0.03 }, 3.0, &grid, &p);
        let h = effort_demand(Prices { w: 1.1, v: 0.01 * x }, 0.2, &grid, &p);
        assert!(l < last.0 && h < last.1, "k={k}");
        last = (l, h);
    }
}

#[test]
fn invalid_params_are_rejected_before_solving() {
    let p = ModelParams {
        sigma: 0.9,
        ..ModelParams::default()
    };
    let grid = TypeGrid::default_uniform(11).unwrap();
    assert!(matches!(free(&p, &grid), Err(SolveError::Params(_))));
}

#[test]
fn unconverged_state_has_no_report() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(21).unwrap();
    let mut s = free(&p, &grid).unwrap();
    s.converged = false;
    assert_eq!(aggregate_report(&s), Err(SolveError::NotConverged));
}
