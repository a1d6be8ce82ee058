//! Laws of motion for the entrepreneur and VC-effort masses.
//!
//! Entrant flows along a path are held at their steady-state values and
//! prices are not re-solved, so each mass converges geometrically at its
//! survival rate.

use crate::params::ModelParams;

/// Entrepreneur mass `M` and VC effort supply `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Masses {
    pub mass_e: f64,
    pub effort_supply: f64,
}

/// One period of both laws of motion: successful entrants join survivors.
pub fn step(prev: Masses, m_e: f64, m_v: f64, params: &ModelParams) -> Masses {
    Masses {
        mass_e: params.s_e * prev.mass_e + params.epsilon * m_e,
        effort_supply: params.s_v * prev.effort_supply + m_v,
    }
}

/// Entrant flows that keep `target` constant.
pub fn steady_entrants(target: Masses, params: &ModelParams) -> (f64, f64) {
    (
        (1.0 - params.s_e) / params.epsilon * target.mass_e,
        (1.0 - params.s_v) * target.effort_supply,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPath {
    pub t: Vec<usize>,
    pub mass_e: Vec<f64>,
    pub effort_supply: Vec<f64>,
    pub entrants_e: Vec<f64>,
    pub entrants_v: Vec<f64>,
}

impl TransitionPath {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First period at which `|x_t - target|` is at most half its initial
    /// value, or `None` if the path never gets there.
    pub fn half_life(series: &[f64], target: f64) -> Option<usize> {
        let gap0 = (series.first()? - target).abs();
        series.iter().position(|x| (x - target).abs() <= 0.5 * gap0)
    }
}

/// Iterates [`step`] for `periods` periods from `initial`, with entrant
/// flows fixed at the levels that sustain `target`. Index 0 holds the
/// initial masses; entrants are reported for every period including 0.
///
/// Masses must be nonnegative.
pub fn simulate_transition(initial: Masses, target: Masses, periods: usize, params: &ModelParams) -> TransitionPath {
    let (m_e, m_v) = steady_entrants(target, params);
    let n = periods + 1;
    let mut path = TransitionPath {
        t: (0..n).collect(),
        mass_e: Vec::with_capacity(n),
        effort_supply: Vec::with_capacity(n),
        entrants_e: vec![m_e; n],
        entrants_v: vec![m_v; n],
    };
    let mut x = initial;
    path.mass_e.push(x.mass_e);
    path.effort_supply.push(x.effort_supply);
    for _ in 0..periods {
        x = step(x, m_e, m_v, params);
        path.mass_e.push(x.mass_e);
        path.effort_supply.push(x.effort_supply);
    }
    path
}

/// `x* + s^t (x_0 - x*)`.
pub fn geometric_path(x0: f64, target: f64, survival: f64, t: usize) -> f64 {
    target + survival.powi(t as i32) * (x0 - target)
}

/// Periods needed to halve a gap that shrinks by factor `survival` per
/// period: `ceil(ln 2 / -ln survival)`.
pub fn half_life(survival: f64) -> usize {
    (std::f64::consts::LN_2 / -survival.ln()).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn masses(m: f64, h: f64) -> Masses {
        Masses {
            mass_e: m,
            effort_supply: h,
        }
    }

    #[test]
    fn steady_flows_are_a_fixed_point() {
        let p = ModelParams::default();
        let x = masses(3.4, 1.8);
        let (m_e, m_v) = steady_entrants(x, &p);
        let y = step(x, m_e, m_v, &p);
        assert!((y.mass_e - x.mass_e).abs() < 1e-14);
        assert!((y.effort_supply - x.effort_supply).abs() < 1e-14);
    }

    #[test]
    fn no_entry_decays_geometrically() {
        let p = ModelParams::default();
        let y = step(masses(2.0, 5.0), 0.0, 0.0, &p);
        assert_eq!(y.mass_e, 2.0 * p.s_e);
        assert_eq!(y.effort_supply, 5.0 * p.s_v);
    }

    #[test]
    fn table_mass_gives_entrant_flow() {
        let p = ModelParams::default();
        let (m_e, _) = steady_entrants(masses(10.54, 1.0), &p);
        assert!((m_e - 0.04 * 10.54 / 0.57).abs() < 1e-12);
        assert!((m_e - 0.7396).abs() < 1e-4);
    }

    #[test]
    fn path_from_target_is_constant() {
        let p = ModelParams::default();
        let x = masses(3.0, 1.5);
        let path = simulate_transition(x, x, 50, &p);
        assert_eq!(path.len(), 51);
        for (m, h) in path.mass_e.iter().zip(&path.effort_supply) {
            assert!((m - 3.0).abs() < 1e-13 && (h - 1.5).abs() < 1e-13);
        }
    }

    #[test]
    fn half_life_of_vc_effort() {
        let p = ModelParams::default();
        assert_eq!(half_life(p.s_v), 4);
        let path = simulate_transition(masses(0.0, 0.0), masses(3.0, 2.0), 40, &p);
        assert_eq!(
            TransitionPath::half_life(&path.effort_supply, 2.0),
            Some(half_life(p.s_v))
        );
        assert_eq!(TransitionPath::half_life(&path.mass_e, 3.0), Some(half_life(p.s_e)));
    }
}
