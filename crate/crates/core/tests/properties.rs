use proptest::prelude::*;
use vcge_core::dynamics::{geometric_path, simulate_transition, step, Masses};
use vcge_core::model::{bank_policy, vc_effort, vc_policy};
use vcge_core::{build_grid, financing_choice, Family, FirmType, Mode, ModelParams, Prices, Support, TypeGrid};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nash_split_of_surplus(
        z in 0.3f64..3.0, c in 0.3f64..3.0,
        w in 0.5f64..2.0, v in 0.005f64..0.5,
        alpha in 0.2f64..0.8,
    ) {
        let p = ModelParams { alpha, ..ModelParams::default() };
        let t = FirmType { z, c };
        let outside = bank_policy(t, w, &p).value;
        let vc = vc_policy(t, Prices { w, v }, outside, &p);
        if vc.funded {
            prop_assert!(close(vc.s_v, alpha * vc.total_surplus, 1e-12));
            prop_assert!(close(vc.s_e, (1.0 - alpha) * vc.total_surplus, 1e-12));
            prop_assert!(close(vc.s_e + vc.s_v, vc.total_surplus, 1e-12));
        } else {
            // unfunded matches split nothing
            prop_assert!(vc.total_surplus < 0.0 && vc.s_e == 0.0 && vc.s_v == 0.0);
        }
    }

    #[test]
    fn vc_effort_is_linear_in_productivity(
        z in 0.1f64..5.0, scale in 0.1f64..10.0, c in 0.3f64..3.0,
        w in 0.5f64..2.0, v in 0.005f64..0.5,
    ) {
        let p = ModelParams::default();
        let prices = Prices { w, v };
        let h = vc_effort(FirmType { z, c }, prices, &p);
        let hs = vc_effort(FirmType { z: scale * z, c }, prices, &p);
        prop_assert!(close(hs, scale * h, 1e-12));
    }

    #[test]
    fn funded_types_have_nonnegative_value(
        z in 0.3f64..3.0, c in 0.3f64..3.0,
        w in 0.5f64..2.0, v in 0.005f64..0.5,
    ) {
        let p = ModelParams::default();
        let m = financing_choice(FirmType { z, c }, Prices { w, v }, &p);
        match m.mode {
            Mode::Vc => prop_assert!(m.total_surplus >= 0.0 && m.h > 0.0),
            Mode::Bank => prop_assert!(m.bank_value > 0.0 && m.h == 0.0),
            Mode::NoEntry => prop_assert!(m.l == 0.0 && m.y == 0.0),
        }
    }

    #[test]
    fn quadrature_is_linear(
        a in -5.0f64..5.0, b in -5.0f64..5.0,
        n in 2usize..40, lognormal in any::<bool>(),
    ) {
        let family = if lognormal {
            Family::TruncatedLognormal { mu_z: 0.0, s_z: 0.5, mu_c: 0.2, s_c: 0.3 }
        } else {
            Family::Uniform
        };
        let s = Support { lo: 0.5, hi: 1.5 };
        let g = build_grid(family, s, s, (n, n + 1)).unwrap();
        let f = |t: FirmType| (t.z * t.c).sin();
        let h = |t: FirmType| t.z.powi(3) - t.c;
        let lhs = g.integrate(|t| a * f(t) + b * h(t), |_| true).unwrap();
        let rhs = a * g.integrate(f, |_| true).unwrap() + b * g.integrate(h, |_| true).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()) * 10.0);
    }

    #[test]
    fn quadrature_exact_for_affine_integrands(
        a in -5.0f64..5.0, b in -5.0f64..5.0, d in -5.0f64..5.0,
        lo in 0.1f64..2.0, width in 0.1f64..3.0, n in 1usize..60,
    ) {
        let s = Support { lo, hi: lo + width };
        let g = build_grid(Family::Uniform, s, s, (n + 1, n + 2)).unwrap();
        let mid = lo + 0.5 * width;
        let got = g.integrate(|t| a + b * t.z + d * t.c, |_| true).unwrap();
        prop_assert!((got - (a + (b + d) * mid)).abs() <= 1e-12 * (1.0 + a.abs() + (b.abs() + d.abs()) * mid));
        let bilinear = g.integrate(|t| t.z * t.c, |_| true).unwrap();
        prop_assert!(close(bilinear, mid * mid, 1e-12));
    }

    #[test]
    fn dynamics_superpose(
        m0 in 0.0f64..10.0, h0 in 0.0f64..10.0,
        m1 in 0.0f64..10.0, h1 in 0.0f64..10.0,
        m_e in 0.0f64..2.0, m_v in 0.0f64..2.0,
    ) {
        // the step is affine: differences of two paths evolve without entrants
        let p = ModelParams::default();
        let x = step(Masses { mass_e: m0, effort_supply: h0 }, m_e, m_v, &p);
        let y = step(Masses { mass_e: m1, effort_supply: h1 }, m_e, m_v, &p);
        let d = step(Masses { mass_e: m0 - m1, effort_supply: h0 - h1 }, 0.0, 0.0, &p);
        prop_assert!(close(x.mass_e - y.mass_e, d.mass_e, 1e-12));
        prop_assert!(close(x.effort_supply - y.effort_supply, d.effort_supply, 1e-12));
    }

    #[test]
    fn transition_matches_geometric_path(
        m0 in 0.0f64..10.0, h0 in 0.0f64..10.0,
        m_star in 0.1f64..10.0, h_star in 0.1f64..10.0,
    ) {
        let p = ModelParams::default();
        let target = Masses { mass_e: m_star, effort_supply: h_star };
        let path = simulate_transition(Masses { mass_e: m0, effort_supply: h0 }, target, 200, &p);
        for t in 0..=200 {
            prop_assert!((path.mass_e[t] - geometric_path(m0, m_star, p.s_e, t)).abs() <= 1e-12 * m_star.max(m0).max(1.0));
            prop_assert!((path.effort_supply[t] - geometric_path(h0, h_star, p.s_v, t)).abs() <= 1e-12 * h_star.max(h0).max(1.0));
        }
    }
}

#[test]
fn default_grid_shape() {
    let g = TypeGrid::default_uniform(101).unwrap();
    assert_eq!((g.nz(), g.nc()), (101, 101));
}
