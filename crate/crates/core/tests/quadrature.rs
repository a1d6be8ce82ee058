use vcge_core::equilibrium::{aggregates, pointwise_aggregates};
use vcge_core::oracle::monte_carlo;
use vcge_core::{
    build_grid, financing_choice, solve_steady_state, Controls, Family, Mode, ModelParams, SolveMode, Support, TypeGrid,
};

fn unit() -> Support {
    Support { lo: 0.5, hi: 1.5 }
}

fn lognormal() -> Family {
    Family::TruncatedLognormal {
        mu_z: 0.0,
        s_z: 0.4,
        mu_c: 0.1,
        s_c: 0.3,
    }
}

#[test]
fn weights_sum_to_one() {
    for n in [2, 7, 51, 101, 400] {
        for family in [Family::Uniform, lognormal()] {
            let g = build_grid(family, unit(), unit(), (n, n + 3)).unwrap();
            let total = g.integrate(|_| 1.0, |_| true).unwrap();
            assert!((total - 1.0).abs() < 1e-12, "n={n} {family:?}: {total}");
        }
    }
}

fn smooth(t: vcge_core::FirmType) -> f64 {
    (t.z * t.c).exp() * t.z.powf(1.7) / (1.0 + t.c * t.c)
}

fn observed_order(family: Family, exact: Option<f64>) -> f64 {
    let at = |n: usize| {
        build_grid(family, unit(), unit(), (n, n))
            .unwrap()
            .integrate(smooth, |_| true)
            .unwrap()
    };
    let (a, b, c) = (at(10), at(20), at(40));
    match exact {
        Some(x) => ((a - x).abs() / (b - x).abs()).log2(),
        // Richardson-style estimate from three levels
        None => ((a - b).abs() / (b - c).abs()).log2(),
    }
}

#[test]
fn uniform_refinement_order_is_two() {
    let reference = build_grid(Family::Uniform, unit(), unit(), (2000, 2000))
        .unwrap()
        .integrate(smooth, |_| true)
        .unwrap();
    let p = observed_order(Family::Uniform, Some(reference));
    assert!(p >= 1.8, "order {p}");
}

#[test]
fn lognormal_refinement_order_is_two() {
    let p = observed_order(lognormal(), None);
    assert!(p >= 1.8, "order {p}");
}

#[test]
fn row_quadrature_agrees_with_node_quadrature_as_grid_refines() {
    let p = ModelParams::default();
    let prices = vcge_core::Prices { w: 1.1, v: 0.03 };
    let gap = |n: usize| {
        let g = TypeGrid::default_uniform(n).unwrap();
        let a = aggregates(prices, &g, &p);
        let b = pointwise_aggregates(prices, &g, &p);
        (a.labor - b.labor).abs() / a.labor
    };
    let (coarse, fine) = (gap(25), gap(201));
    assert!(fine < 1e-3, "{fine}");
    assert!(fine <= coarse);
}

/// Grid demand integrals against a seeded Monte Carlo at the benchmark prices.
#[test]
fn demand_integrals_match_monte_carlo() {
    let p = ModelParams::default();
    let grid = TypeGrid::default_uniform(101).unwrap();
    let state = solve_steady_state(
        &p,
        &grid,
        SolveMode::FreeEntry {
            mass_e: 3.0,
            effort_supply: 1.0,
        },
        &Controls::default(),
    )
    .unwrap();
    let agg = aggregates(state.prices, &grid, &p);
    let draws = 1_000_000;
    let labor = monte_carlo(&grid, |t| financing_choice(t, state.prices, &p).l, draws, 11);
    let effort = monte_carlo(
        &grid,
        |t| {
            let m = financing_choice(t, state.prices, &p);
            if m.mode == Mode::Vc {
                m.h
            } else {
                0.0
            }
        },
        draws,
        12,
    );
    assert!(labor.z_score(agg.labor) <= 3.0, "labor {} vs {labor:?}", agg.labor);
    assert!(effort.z_score(agg.effort) <= 3.0, "effort {} vs {effort:?}", agg.effort);
}
