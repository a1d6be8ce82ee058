//! Scenario snapshots and the proposition sign checks between them.
//!
//! Every check reads only what a [`Snapshot`] holds, and a snapshot holds
//! only what the emitted summary, policy and region tables hold, so each
//! verdict can be recomputed from the files alone.

use std::fmt;

use vcge_core::equilibrium::EquilibriumState;
use vcge_core::model::{financing_choice, row_policy, vc_cost_cutoff, Mode};
use vcge_core::{FirmType, ModelParams, Prices, TypeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rise,
    Fall,
    Flat,
    /// Pointwise comparison with both signs present.
    Mixed,
    /// Pointwise comparison over an empty common set.
    Empty,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Rise => "rise",
            Direction::Fall => "fall",
            Direction::Flat => "flat",
            Direction::Mixed => "mixed",
            Direction::Empty => "empty",
        }
    }

    pub fn of(old: f64, new: f64) -> Direction {
        if new > old {
            Direction::Rise
        } else if new < old {
            Direction::Fall
        } else {
            Direction::Flat
        }
    }

    /// Strict direction shared by every pair, if any.
    pub fn pointwise(pairs: impl IntoIterator<Item = (f64, f64)>) -> Direction {
        let (mut up, mut down, mut n) = (0usize, 0usize, 0usize);
        for (old, new) in pairs {
            n += 1;
            match Direction::of(old, new) {
                Direction::Rise => up += 1,
                Direction::Fall => down += 1,
                _ => {}
            }
        }
        match (n, up, down) {
            (0, _, _) => Direction::Empty,
            (n, u, 0) if u == n => Direction::Rise,
            (n, 0, d) if d == n => Direction::Fall,
            (_, 0, 0) => Direction::Flat,
            _ => Direction::Mixed,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Analytic thresholds of one `c` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub c: f64,
    /// Bank feasibility threshold.
    pub z_bank: f64,
    /// Smallest VC-funded `z`; infinite when the row is never VC-funded.
    pub z_vc: f64,
    /// Left side of the VC-versus-bank inequality.
    pub advantage: f64,
}

/// Per-type policy at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyRow {
    pub z: f64,
    pub c: f64,
    pub mode: Mode,
    pub f: f64,
    pub h: f64,
    pub l: f64,
    pub s_e: f64,
    pub s_v: f64,
}

/// Everything a sign check may look at.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub label: String,
    pub params: ModelParams,
    pub prices: Prices,
    pub mass_e: f64,
    pub effort_supply: f64,
    pub labor_productivity: f64,
    /// Closed-form VC cost cutoff; 0 when VC financing wins at every `c`.
    pub c_cutoff: f64,
    pub thresholds: Vec<ThresholdRow>,
    pub policy: Vec<PolicyRow>,
}

impl Snapshot {
    pub fn new(label: &str, state: &EquilibriumState, grid: &TypeGrid, params: &ModelParams) -> Snapshot {
        let prices = state.prices;
        Snapshot {
            label: label.to_string(),
            params: *params,
            prices,
            mass_e: state.mass_e,
            effort_supply: state.effort_supply,
            labor_productivity: state.labor_productivity,
            c_cutoff: vc_cost_cutoff(prices, params).unwrap_or(0.0),
            thresholds: threshold_rows(prices, params, &grid.c.nodes),
            policy: policy_rows(prices, params, grid),
        }
    }
}

pub fn threshold_rows(prices: Prices, params: &ModelParams, c_values: &[f64]) -> Vec<ThresholdRow> {
    c_values
        .iter()
        .map(|&c| {
            let row = row_policy(c, prices, params);
            ThresholdRow {
                c,
                z_bank: row.bank_threshold,
                z_vc: if row.vc_row { row.vc_threshold } else { f64::INFINITY },
                advantage: row.vc_gross / row.bank_gross,
            }
        })
        .collect()
}

/// Policies at every grid node, `c`-major.
pub fn policy_rows(prices: Prices, params: &ModelParams, grid: &TypeGrid) -> Vec<PolicyRow> {
    grid.nodes().map(|(t, _)| policy_row(t, prices, params)).collect()
}

fn policy_row(t: FirmType, prices: Prices, params: &ModelParams) -> PolicyRow {
    let m = financing_choice(t, prices, params);
    PolicyRow {
        z: t.z,
        c: t.c,
        mode: m.mode,
        f: m.f,
        h: m.h,
        l: m.l,
        s_e: m.s_e,
        s_v: m.s_v,
    }
}

/// One claimed direction and what the scenario pair shows.
#[derive(Debug, Clone, PartialEq)]
pub struct SignCheck {
    pub proposition: &'static str,
    pub baseline: String,
    pub scenario: String,
    pub claim: &'static str,
    pub expected: Direction,
    pub observed: Direction,
}

impl SignCheck {
    pub fn pass(&self) -> bool {
        self.expected == self.observed
    }
}

/// Which proposition a one-parameter change speaks to, if any.
pub fn proposition_for(param: &str, old: f64, new: f64) -> Option<&'static str> {
    if !(new < old) {
        return None;
    }
    match param {
        "I" => Some("Prop 2"),
        "r" => Some("Prop 3"),
        "kappa_v" => Some("Prop 4"),
        _ => None,
    }
}

/// Sign checks for `alt` against `base` after lowering `param`.
pub fn proposition_checks(base: &Snapshot, alt: &Snapshot, param: &str) -> Vec<SignCheck> {
    let (Some(old), Some(new)) = (base.params.get(param), alt.params.get(param)) else {
        return Vec::new();
    };
    let Some(prop) = proposition_for(param, old, new) else {
        return Vec::new();
    };
    let check = |claim, expected, observed| SignCheck {
        proposition: prop,
        baseline: base.label.clone(),
        scenario: alt.label.clone(),
        claim,
        expected,
        observed,
    };
    let z_bank = check("z_s falls at every c", Direction::Fall, bank_thresholds(base, alt));
    let z_vc = check(
        "z_vc falls at every c funded in both",
        Direction::Fall,
        vc_thresholds(base, alt),
    );
    let m = check("M rises", Direction::Rise, Direction::of(base.mass_e, alt.mass_e));
    let h_total = check(
        "H rises",
        Direction::Rise,
        Direction::of(base.effort_supply, alt.effort_supply),
    );
    let yl = check(
        "Y/L rises",
        Direction::Rise,
        Direction::of(base.labor_productivity, alt.labor_productivity),
    );
    match prop {
        "Prop 2" => vec![
            z_bank,
            z_vc,
            check(
                "h falls on the common funded set",
                Direction::Fall,
                common_effort(base, alt),
            ),
            m,
            yl,
        ],
        "Prop 3" => vec![z_bank, z_vc, m, h_total, yl],
        _ => vec![
            check("c_v falls", Direction::Fall, Direction::of(base.c_cutoff, alt.c_cutoff)),
            check(
                "h rises on the common funded set",
                Direction::Rise,
                common_effort(base, alt),
            ),
            h_total,
            yl,
        ],
    }
}

fn bank_thresholds(base: &Snapshot, alt: &Snapshot) -> Direction {
    Direction::pointwise(
        base.thresholds
            .iter()
            .zip(&alt.thresholds)
            .map(|(a, b)| (a.z_bank, b.z_bank)),
    )
}

fn vc_thresholds(base: &Snapshot, alt: &Snapshot) -> Direction {
    Direction::pointwise(
        base.thresholds
            .iter()
            .zip(&alt.thresholds)
            .filter(|(a, b)| a.z_vc.is_finite() && b.z_vc.is_finite())
            .map(|(a, b)| (a.z_vc, b.z_vc)),
    )
}

/// VC effort compared at nodes VC-funded in both scenarios.
fn common_effort(base: &Snapshot, alt: &Snapshot) -> Direction {
    Direction::pointwise(
        base.policy
            .iter()
            .zip(&alt.policy)
            .filter(|(a, b)| a.mode == Mode::Vc && b.mode == Mode::Vc)
            .map(|(a, b)| (a.h, b.h)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_directions() {
        assert_eq!(Direction::pointwise([(1.0, 2.0), (3.0, 4.0)]), Direction::Rise);
        assert_eq!(Direction::pointwise([(1.0, 0.5)]), Direction::Fall);
        assert_eq!(Direction::pointwise([(1.0, 2.0), (3.0, 2.0)]), Direction::Mixed);
        assert_eq!(Direction::pointwise([(1.0, 1.0), (3.0, 4.0)]), Direction::Mixed);
        assert_eq!(Direction::pointwise([(1.0, 1.0)]), Direction::Flat);
        assert_eq!(Direction::pointwise(Vec::<(f64, f64)>::new()), Direction::Empty);
    }

    #[test]
    fn only_decreases_map_to_propositions() {
        assert_eq!(proposition_for("I", 1.0, 0.8), Some("Prop 2"));
        assert_eq!(proposition_for("r", 0.05, 0.02), Some("Prop 3"));
        assert_eq!(proposition_for("kappa_v", 1.0, 0.5), Some("Prop 4"));
        assert_eq!(proposition_for("I", 1.0, 1.2), None);
        assert_eq!(proposition_for("gamma", 1.0, 0.5), None);
    }
}
