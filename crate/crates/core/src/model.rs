//! Closed-form decision rules for a single project type.
//!
//! Every rule is evaluated in log space: the products of powers below span
//! many orders of magnitude once `z`, `c`, `v` and `w` move away from one.
//!
//! All quantities are homogeneous of degree one in `z` (effort, labor,
//! output, profit), or affine in `z` (values and surpluses). [`RowPolicy`]
//! captures the per-unit-`z` coefficients for a fixed effort cost `c`, which
//! is what the aggregation code integrates.

use crate::params::{discount_bundle, FirmType, ModelParams, Prices};

/// Labor demand, output and operating profit of a successful project.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaborChoice {
    pub l: f64,
    pub y: f64,
    pub profit: f64,
}

/// Static labor choice given productivity `z`, management composite
/// `mgmt` and wage `w`.
pub fn labor_profit(z: f64, mgmt: f64, w: f64, params: &ModelParams) -> LaborChoice {
    if mgmt <= 0.0 || z <= 0.0 {
        return LaborChoice {
            l: 0.0,
            y: 0.0,
            profit: 0.0,
        };
    }
    let ModelParams { chi, theta, beta, .. } = *params;
    let inv = 1.0 / (1.0 - beta);
    // ln of z^{chi/(1-beta)} F^{theta/(1-beta)}
    let scale = inv * (chi * z.ln() + theta * mgmt.ln());
    let ln_bw = (beta / w).ln();
    let l = (inv * ln_bw + scale).exp();
    let profit = (1.0 - beta) * (beta * inv * ln_bw + scale).exp();
    let y = (chi * z.ln() + theta * mgmt.ln() + beta * l.ln()).exp();
    LaborChoice { l, y, profit }
}

/// CES management composite `[gamma h^rho + f^rho]^(1/rho)`, `rho = (sigma-1)/sigma`.
pub fn ces_management(h: f64, f: f64, params: &ModelParams) -> f64 {
    let rho = (params.sigma - 1.0) / params.sigma;
    match (h > 0.0, f > 0.0) {
        (false, false) => 0.0,
        (false, true) => f,
        (true, false) => params.gamma.powf(1.0 / rho) * h,
        (true, true) => {
            // factor out the larger term to keep the sum well scaled
            let a = params.gamma.ln() + rho * h.ln();
            let b = rho * f.ln();
            let m = a.max(b);
            let s = m + ((a - m).exp() + (b - m).exp()).ln();
            (s / rho).exp()
        }
    }
}

/// Solo (bank-financed) founder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankPolicy {
    /// Founder effort.
    pub f: f64,
    /// Project value net of the investment, floored at zero.
    pub value: f64,
    /// Productivity above which bank finance is feasible.
    pub threshold: f64,
}

/// `ln[chi (theta/c)^(theta/chi) D^(1+theta/chi) (beta/w)^(beta/chi)]`: the
/// gross value per unit of `z` of a bank-financed project.
fn ln_bank_gross_per_z(c: f64, w: f64, params: &ModelParams) -> f64 {
    let ModelParams { chi, theta, beta, .. } = *params;
    let disc = discount_bundle(params).project;
    chi.ln() + theta / chi * (theta / c).ln() + (1.0 + theta / chi) * disc.ln() + beta / chi * (beta / w).ln()
}

pub fn bank_policy(t: FirmType, w: f64, params: &ModelParams) -> BankPolicy {
    let ModelParams { chi, theta, beta, .. } = *params;
    let disc = discount_bundle(params).project;
    let f = (t.z.ln() + (theta + chi) / chi * (disc * theta / t.c).ln() + beta / chi * (beta / w).ln()).exp();
    let gross = ln_bank_gross_per_z(t.c, w, params).exp();
    BankPolicy {
        f,
        value: (t.z * gross - params.invest).max(0.0),
        threshold: params.invest / gross,
    }
}

/// Outcome of Nash bargaining plus the non-cooperative effort stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcPolicy {
    pub h: f64,
    pub f: f64,
    pub mgmt: f64,
    /// Present value of profit minus investment minus the founder's
    /// outside option.
    pub total_surplus: f64,
    pub funded: bool,
    pub s_e: f64,
    pub s_v: f64,
    /// Success payment to the VC; zero when not funded.
    pub payment: f64,
}

/// `(v/c)(1-alpha)/(alpha gamma)`: founder-to-VC effort ratio is this to the
/// power `sigma`.
pub fn effort_price_ratio(c: f64, v: f64, params: &ModelParams) -> f64 {
    (v / c) * (1.0 - params.alpha) / (params.alpha * params.gamma)
}

/// `ln[1 + gamma^-sigma ((v/c)(1-alpha)/alpha)^(sigma-1)]`.
fn ln_ces_bracket(c: f64, v: f64, params: &ModelParams) -> f64 {
    let ModelParams {
        sigma, gamma, alpha, ..
    } = *params;
    let u = -sigma * gamma.ln() + (sigma - 1.0) * ((v / c) * (1.0 - alpha) / alpha).ln();
    softplus(u)
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 30.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// VC effort from the pair of incentive-compatible first-order conditions.
pub fn vc_effort(t: FirmType, prices: Prices, params: &ModelParams) -> f64 {
    let ModelParams {
        chi,
        theta,
        beta,
        sigma,
        gamma,
        alpha,
        ..
    } = *params;
    let disc = discount_bundle(params).project;
    (t.z.ln()
        + (theta + chi) / chi * (alpha * disc * theta / prices.v).ln()
        + beta / chi * (beta / prices.w).ln()
        + theta * sigma / (chi * (sigma - 1.0)) * gamma.ln()
        + (theta / (chi * (sigma - 1.0)) - 1.0) * ln_ces_bracket(t.c, prices.v, params))
    .exp()
}

/// VC-financed project given the founder's outside option `outside`.
pub fn vc_policy(t: FirmType, prices: Prices, outside: f64, params: &ModelParams) -> VcPolicy {
    let h = vc_effort(t, prices, params);
    let f = effort_price_ratio(t.c, prices.v, params).powf(params.sigma) * h;
    let mgmt = ces_management(h, f, params);
    let disc = discount_bundle(params).project;
    let pv = disc * labor_profit(t.z, mgmt, prices.w, params).profit;
    let total_surplus = pv - params.invest - outside;
    let funded = total_surplus >= 0.0;
    let (s_e, s_v, payment) = if funded {
        let s_v = params.alpha * total_surplus;
        (
            (1.0 - params.alpha) * total_surplus,
            s_v,
            (s_v + params.invest) / params.epsilon,
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    VcPolicy {
        h,
        f,
        mgmt,
        total_surplus,
        funded,
        s_e,
        s_v,
        payment,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    NoEntry,
    Bank,
    Vc,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::NoEntry => "none",
            Mode::Bank => "bank",
            Mode::Vc => "vc",
        }
    }
}

/// Full per-type solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MicroPolicy {
    pub mode: Mode,
    pub f: f64,
    pub h: f64,
    pub mgmt: f64,
    pub l: f64,
    pub y: f64,
    /// Bank-finance value `E` (the founder's outside option under VC).
    pub bank_value: f64,
    pub total_surplus: f64,
    pub s_e: f64,
    pub s_v: f64,
    /// Success payment; only meaningful in [`Mode::Vc`].
    pub payment: Option<f64>,
}

impl MicroPolicy {
    fn no_entry() -> Self {
        MicroPolicy {
            mode: Mode::NoEntry,
            f: 0.0,
            h: 0.0,
            mgmt: 0.0,
            l: 0.0,
            y: 0.0,
            bank_value: 0.0,
            total_surplus: 0.0,
            s_e: 0.0,
            s_v: 0.0,
            payment: None,
        }
    }

    pub fn is_funded(&self) -> bool {
        self.mode != Mode::NoEntry
    }
}

/// Financing mode: VC whenever total surplus is nonnegative, otherwise
/// bank when it has positive value, otherwise no entry.
pub fn financing_choice(t: FirmType, prices: Prices, params: &ModelParams) -> MicroPolicy {
    let bank = bank_policy(t, prices.w, params);
    let vc = vc_policy(t, prices, bank.value, params);
    if vc.funded {
        let labor = labor_profit(t.z, vc.mgmt, prices.w, params);
        MicroPolicy {
            mode: Mode::Vc,
            f: vc.f,
            h: vc.h,
            mgmt: vc.mgmt,
            l: labor.l,
            y: labor.y,
            bank_value: bank.value,
            total_surplus: vc.total_surplus,
            s_e: vc.s_e,
            s_v: vc.s_v,
            payment: Some(vc.payment),
        }
    } else if bank.value > 0.0 {
        let labor = labor_profit(t.z, bank.f, prices.w, params);
        MicroPolicy {
            mode: Mode::Bank,
            f: bank.f,
            h: 0.0,
            mgmt: bank.f,
            l: labor.l,
            y: labor.y,
            bank_value: bank.value,
            total_surplus: vc.total_surplus,
            s_e: 0.0,
            s_v: 0.0,
            payment: None,
        }
    } else {
        MicroPolicy {
            total_surplus: vc.total_surplus,
            ..MicroPolicy::no_entry()
        }
    }
}

/// Ratio of the VC-financed present value to the bank-financed gross value
/// for a common `z`. Independent of `z` and `w`; VC financing beats bank
/// financing for bank-feasible types iff this is at least one.
pub fn vc_advantage(c: f64, prices: Prices, params: &ModelParams) -> f64 {
    let ModelParams {
        chi,
        theta,
        sigma,
        gamma,
        alpha,
        ..
    } = *params;
    let k = theta / chi;
    (((theta + chi) / chi).ln()
        + k * (c * alpha / prices.v).ln()
        + theta * sigma / (chi * (sigma - 1.0)) * gamma.ln()
        + k / (sigma - 1.0) * ln_ces_bracket(c, prices.v, params))
    .exp()
}

/// Effort cost at which [`vc_advantage`] equals one, solved in closed form.
/// Returns `None` when the advantage is at least one for every `c > 0`.
pub fn vc_cost_cutoff(prices: Prices, params: &ModelParams) -> Option<f64> {
    let ModelParams {
        chi,
        theta,
        sigma,
        gamma,
        alpha,
        ..
    } = *params;
    let k = theta / chi;
    // advantage = [A (c^(sigma-1) + B)]^(k/(sigma-1)) with
    // A = ((theta+chi)/chi)^((sigma-1)/k) (alpha/v)^(sigma-1) gamma^sigma,
    // B = gamma^-sigma (v (1-alpha)/alpha)^(sigma-1)
    let s1 = sigma - 1.0;
    let ln_a = s1 / k * ((theta + chi) / chi).ln() + s1 * (alpha / prices.v).ln() + sigma * gamma.ln();
    let b = (-sigma * gamma.ln() + s1 * (prices.v * (1.0 - alpha) / alpha).ln()).exp();
    let target = (-ln_a).exp() - b;
    if target <= 0.0 {
        None
    } else {
        Some(target.powf(1.0 / s1))
    }
}

/// Per-unit-`z` coefficients of every policy for a fixed effort cost `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPolicy {
    pub c: f64,
    /// Bank-financed gross value per unit z (`E + I = bank_gross * z`).
    pub bank_gross: f64,
    pub bank_l: f64,
    pub bank_y: f64,
    /// VC-financed present value of profit per unit z.
    pub vc_gross: f64,
    pub vc_h: f64,
    pub vc_l: f64,
    pub vc_y: f64,
    /// `vc_gross >= bank_gross`: VC wins wherever bank finance is feasible.
    pub vc_row: bool,
    pub bank_threshold: f64,
    /// Smallest z with nonnegative VC surplus; infinite when VC never wins.
    pub vc_threshold: f64,
}

pub fn row_policy(c: f64, prices: Prices, params: &ModelParams) -> RowPolicy {
    let unit = FirmType { z: 1.0, c };
    let bank = bank_policy(unit, prices.w, params);
    let bank_labor = labor_profit(1.0, bank.f, prices.w, params);
    let bank_gross = ln_bank_gross_per_z(c, prices.w, params).exp();

    let h = vc_effort(unit, prices, params);
    let f = effort_price_ratio(c, prices.v, params).powf(params.sigma) * h;
    let mgmt = ces_management(h, f, params);
    let vc_labor = labor_profit(1.0, mgmt, prices.w, params);
    let vc_gross = discount_bundle(params).project * vc_labor.profit;

    let vc_row = vc_gross >= bank_gross;
    RowPolicy {
        c,
        bank_gross,
        bank_l: bank_labor.l,
        bank_y: bank_labor.y,
        vc_gross,
        vc_h: h,
        vc_l: vc_labor.l,
        vc_y: vc_labor.y,
        vc_row,
        bank_threshold: params.invest / bank_gross,
        vc_threshold: if vc_row {
            params.invest / vc_gross
        } else {
            f64::INFINITY
        },
    }
}

/// Location of a threshold relative to a searched interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Below,
    Inside(f64),
    Above,
}

impl Bound {
    pub fn value(self) -> Option<f64> {
        match self {
            Bound::Inside(x) => Some(x),
            _ => None,
        }
    }

    /// Total order Below < Inside(x) < Above.
    pub fn rank(self) -> (i8, f64) {
        match self {
            Bound::Below => (-1, 0.0),
            Bound::Inside(x) => (0, x),
            Bound::Above => (1, 0.0),
        }
    }

    pub fn lt(self, other: Bound) -> bool {
        let (a, x) = self.rank();
        let (b, y) = other.rank();
        a < b || (a == b && a == 0 && x < y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryRow {
    pub c: f64,
    /// Bank entry threshold from the closed form (not clamped).
    pub z_bank: f64,
    pub z_bank_bound: Bound,
    /// Smallest z with nonnegative VC surplus, by bisection.
    pub z_vc: Bound,
    pub advantage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionBoundaries {
    pub rows: Vec<BoundaryRow>,
    /// Smallest c at which VC beats bank for bank-feasible types.
    pub c_cutoff: Bound,
    /// True when some boundary left the searched range.
    pub out_of_range: bool,
}

impl RegionBoundaries {
    pub fn bank_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].z_bank > p[0].z_bank)
    }

    pub fn advantage_strictly_increasing(&self) -> bool {
        self.rows.windows(2).all(|p| p[1].advantage > p[0].advantage)
    }
}

const BISECTION_STEPS: usize = 200;

/// Bank and VC feasibility boundaries across effort costs.
///
/// `c_values` must be ascending; `z_range` bounds the VC-boundary search.
pub fn region_boundaries(
    prices: Prices,
    params: &ModelParams,
    c_values: &[f64],
    z_range: (f64, f64),
) -> RegionBoundaries {
    let (z_lo, z_hi) = z_range;
    let surplus = |z: f64, c: f64| {
        let t = FirmType { z, c };
        let e = bank_policy(t, prices.w, params).value;
        vc_policy(t, prices, e, params).total_surplus
    };
    let mut out_of_range = false;
    let rows = c_values
        .iter()
        .map(|&c| {
            let z_bank = bank_policy(FirmType { z: 1.0, c }, prices.w, params).threshold;
            let z_bank_bound = if z_bank < z_lo {
                Bound::Below
            } else if z_bank > z_hi {
                Bound::Above
            } else {
                Bound::Inside(z_bank)
            };
            let z_vc = if surplus(z_lo, c) >= 0.0 {
                Bound::Below
            } else if surplus(z_hi, c) < 0.0 {
                Bound::Above
            } else {
                let (mut lo, mut hi) = (z_lo, z_hi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if surplus(mid, c) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Bound::Inside(hi)
            };
            if !matches!(z_vc, Bound::Inside(_)) || !matches!(z_bank_bound, Bound::Inside(_)) {
                out_of_range = true;
            }
            BoundaryRow {
                c,
                z_bank,
                z_bank_bound,
                z_vc,
                advantage: vc_advantage(c, prices, params),
            }
        })
        .collect::<Vec<_>>();

    let c_cutoff = match (c_values.first(), c_values.last()) {
        (Some(&c_lo), Some(&c_hi)) => {
            let gap = |c: f64| vc_advantage(c, prices, params) - 1.0;
            if gap(c_lo) >= 0.0 {
                Bound::Below
            } else if gap(c_hi) < 0.0 {
                Bound::Above
            } else {
                let (mut lo, mut hi) = (c_lo, c_hi);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if gap(mid) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Bound::Inside(hi)
            }
        }
        _ => Bound::Above,
    };
    if !matches!(c_cutoff, Bound::Inside(_)) {
        out_of_range = true;
    }
    RegionBoundaries {
        rows,
        c_cutoff,
        out_of_range,
    }
}
