//! Stationary competitive equilibrium.
//!
//! The solver is the nested fixed point:
//!
//! 1. guess the entrepreneur mass `M` and VC effort supply `H`;
//! 2. guess the wage `w`;
//! 3. given `H`, find the shadow cost `v` clearing the VC-effort market;
//! 4. bisect on `w` until the labor market clears;
//! 5. update `(M, H)` multiplicatively from the free-entry gaps.
//!
//! Aggregates are integrated row by row over the type grid. Within a c-row
//! every policy is affine in `z` with closed-form thresholds, and each
//! c-cell is split where the financing mode of the whole row switches, so
//! the integrals move continuously with prices.

use log::debug;

use crate::distribution::{Neumaier, TypeGrid};
use crate::error::{IterationTrace, SolveError};
use crate::model::{financing_choice, row_policy, vc_cost_cutoff, Mode};
use crate::params::{ModelParams, Prices};

/// Per-unit-mass integrals against the type distribution at given prices.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Aggregates {
    /// Labor of funded projects.
    pub labor: f64,
    /// VC effort of VC-funded projects.
    pub effort: f64,
    pub output: f64,
    /// Bank value `E` over the bank-feasible set.
    pub bank_value: f64,
    /// Founder surplus over the VC-funded set.
    pub surplus_e: f64,
    /// VC surplus over the VC-funded set.
    pub surplus_v: f64,
    pub share_vc: f64,
    pub share_bank: f64,
}

impl Aggregates {
    /// Expected value of entry for an entrepreneur.
    pub fn value_e(&self) -> f64 {
        self.bank_value + self.surplus_e
    }
}

pub fn aggregates(prices: Prices, grid: &TypeGrid, params: &ModelParams) -> Aggregates {
    let breaks: Vec<f64> = vc_cost_cutoff(prices, params).into_iter().collect();
    let mut acc = [Neumaier::default(); 8];
    let invest = params.invest;
    let alpha = params.alpha;
    for piece in grid.row_pieces(&breaks) {
        let row = row_policy(piece.c, prices, params);
        let bank_feasible = grid.row_moments(piece, row.bank_threshold, f64::INFINITY);
        let bank_value = bank_feasible.affine(row.bank_gross, -invest);
        acc[3].add(bank_value);
        if row.vc_row {
            let funded = grid.row_moments(piece, row.vc_threshold, f64::INFINITY);
            let below_bank = grid.row_moments(piece, row.vc_threshold, row.bank_threshold);
            // surplus is vc_gross z - I below the bank threshold and
            // (vc_gross - bank_gross) z above it
            let surplus =
                below_bank.affine(row.vc_gross, -invest) + bank_feasible.affine(row.vc_gross - row.bank_gross, 0.0);
            acc[0].add(row.vc_l * funded.z_mass);
            acc[1].add(row.vc_h * funded.z_mass);
            acc[2].add(row.vc_y * funded.z_mass);
            acc[4].add((1.0 - alpha) * surplus);
            acc[5].add(alpha * surplus);
            acc[6].add(funded.mass);
        } else {
            acc[0].add(row.bank_l * bank_feasible.z_mass);
            acc[2].add(row.bank_y * bank_feasible.z_mass);
            acc[7].add(bank_feasible.mass);
        }
    }
    Aggregates {
        labor: acc[0].sum(),
        effort: acc[1].sum(),
        output: acc[2].sum(),
        bank_value: acc[3].sum(),
        surplus_e: acc[4].sum(),
        surplus_v: acc[5].sum(),
        share_vc: acc[6].sum(),
        share_bank: acc[7].sum(),
    }
}

/// Same integrals by plain midpoint quadrature of [`financing_choice`] at
/// the grid nodes with hard masks. First-order accurate near the financing
/// boundaries; used as an independent cross-check.
pub fn pointwise_aggregates(prices: Prices, grid: &TypeGrid, params: &ModelParams) -> Aggregates {
    let mut acc = [Neumaier::default(); 8];
    for (t, w) in grid.nodes() {
        let m = financing_choice(t, prices, params);
        acc[3].add(w * m.bank_value);
        match m.mode {
            Mode::Vc => {
                acc[0].add(w * m.l);
                acc[1].add(w * m.h);
                acc[2].add(w * m.y);
                acc[4].add(w * m.s_e);
                acc[5].add(w * m.s_v);
                acc[6].add(w);
            }
            Mode::Bank => {
                acc[0].add(w * m.l);
                acc[2].add(w * m.y);
                acc[7].add(w);
            }
            Mode::NoEntry => {}
        }
    }
    Aggregates {
        labor: acc[0].sum(),
        effort: acc[1].sum(),
        output: acc[2].sum(),
        bank_value: acc[3].sum(),
        surplus_e: acc[4].sum(),
        surplus_v: acc[5].sum(),
        share_vc: acc[6].sum(),
        share_bank: acc[7].sum(),
    }
}

/// Demand for VC effort from new entrants.
pub fn effort_demand(prices: Prices, m_e: f64, grid: &TypeGrid, params: &ModelParams) -> f64 {
    m_e * aggregates(prices, grid, params).effort
}

/// Labor demand of all operating projects.
pub fn labor_demand(prices: Prices, mass_e: f64, grid: &TypeGrid, params: &ModelParams) -> f64 {
    mass_e * aggregates(prices, grid, params).labor
}

/// Steady-state entrant mass for entrepreneurs.
pub fn entrants_e(mass_e: f64, params: &ModelParams) -> f64 {
    (1.0 - params.s_e) / params.epsilon * mass_e
}

/// Steady-state entrant mass for VCs.
pub fn entrants_v(effort_supply: f64, params: &ModelParams) -> f64 {
    (1.0 - params.s_v) * effort_supply
}

/// Solver tolerances and caps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    /// Relative residual for both price-clearing markets.
    pub price_tol: f64,
    /// Relative (and absolute) tolerance on the free-entry gaps.
    pub entry_tol: f64,
    /// Exponent on the value/cost ratio in the mass updates.
    pub damping: f64,
    /// Iteration cap of each price bisection.
    pub price_iterations: usize,
    /// Iteration cap of the free-entry loop.
    pub entry_iterations: usize,
    /// Geometric bracket expansions allowed per side.
    pub bracket_doublings: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            price_tol: 1e-8,
            entry_tol: 1e-6,
            damping: 0.5,
            price_iterations: 200,
            entry_iterations: 500,
            bracket_doublings: 60,
        }
    }
}

/// Root of a strictly decreasing function of a positive price.
///
/// The bracket is grown geometrically from `guess` until the residual
/// changes sign, then shrunk by Illinois false position on `ln(price)`;
/// every step keeps the root bracketed, falling back to bisection when the
/// interpolated point leaves the bracket. `residual` must already be
/// relative.
fn bisect_decreasing<F>(
    market: &'static str,
    mut residual: F,
    guess: f64,
    tol: f64,
    max_iter: usize,
    doublings: usize,
) -> Result<f64, SolveError>
where
    F: FnMut(f64) -> Result<f64, SolveError>,
{
    let mut lo = guess / 1.05;
    let mut hi = guess * 1.05;
    let mut r_lo = residual(lo)?;
    if r_lo.abs() <= tol {
        return Ok(lo);
    }
    let mut n = 0;
    while r_lo < 0.0 {
        if n == doublings {
            return Err(SolveError::BracketFailure { market, lo, hi });
        }
        hi = lo;
        lo /= 2.0;
        r_lo = residual(lo)?;
        n += 1;
    }
    let mut r_hi = residual(hi)?;
    let mut n = 0;
    while r_hi > 0.0 {
        if n == doublings {
            return Err(SolveError::BracketFailure { market, lo, hi });
        }
        lo = hi;
        r_lo = r_hi;
        hi *= 2.0;
        r_hi = residual(hi)?;
        n += 1;
    }
    if r_hi.abs() <= tol {
        return Ok(hi);
    }
    let (mut x_lo, mut x_hi) = (lo.ln(), hi.ln());
    let mut side = 0i8;
    let mut last = f64::INFINITY;
    for _ in 0..max_iter {
        let width = x_hi - x_lo;
        let mut x = x_lo + width * r_lo / (r_lo - r_hi);
        if !(x > x_lo && x < x_hi) {
            x = 0.5 * (x_lo + x_hi);
        }
        let r = residual(x.exp())?;
        if r.abs() <= tol {
            return Ok(x.exp());
        }
        last = r;
        if r > 0.0 {
            x_lo = x;
            r_lo = r;
            if side == 1 {
                r_hi *= 0.5;
            }
            side = 1;
        } else {
            x_hi = x;
            r_hi = r;
            if side == -1 {
                r_lo *= 0.5;
            }
            side = -1;
        }
        if x_hi - x_lo < 4.0 * f64::EPSILON * x_hi.abs().max(1.0) {
            break;
        }
    }
    Err(SolveError::NonConvergence {
        stage: market,
        iterations: max_iter,
        residual: last,
        trace: None,
    })
}

/// Shadow cost `v` at which effort demand of `m_e` entrants equals `H`.
pub fn clear_effort_market(
    w: f64,
    effort_supply: f64,
    m_e: f64,
    grid: &TypeGrid,
    params: &ModelParams,
    controls: &Controls,
    guess: Option<f64>,
) -> Result<f64, SolveError> {
    bisect_decreasing(
        "effort",
        |v| Ok((effort_demand(Prices { w, v }, m_e, grid, params) - effort_supply) / effort_supply),
        guess.unwrap_or(1.0),
        controls.price_tol,
        controls.price_iterations,
        controls.bracket_doublings,
    )
}

/// Wage and shadow cost jointly clearing the labor and VC-effort markets
/// for given masses.
pub fn clear_prices(
    mass_e: f64,
    effort_supply: f64,
    grid: &TypeGrid,
    params: &ModelParams,
    controls: &Controls,
    guess: Option<Prices>,
) -> Result<Prices, SolveError> {
    let m_e = entrants_e(mass_e, params);
    let guess = guess.unwrap_or(Prices { w: 1.0, v: 1.0 });
    let mut v_hint = guess.v;
    let mut inner = |w: f64| -> Result<f64, SolveError> {
        let v = clear_effort_market(w, effort_supply, m_e, grid, params, controls, Some(v_hint))?;
        v_hint = v;
        Ok(v)
    };
    let w = bisect_decreasing(
        "labor",
        |w| {
            let v = inner(w)?;
            Ok((labor_demand(Prices { w, v }, mass_e, grid, params) - params.labor) / params.labor)
        },
        guess.w,
        controls.price_tol,
        controls.price_iterations,
        controls.bracket_doublings,
    )?;
    let v = inner(w)?;
    Ok(Prices { w, v })
}

/// Free-entry gaps: value of entry minus entry cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryGaps {
    pub value_e: f64,
    pub cost_e: f64,
    pub value_v: f64,
    pub cost_v: f64,
}

impl EntryGaps {
    pub fn gap_e(&self) -> f64 {
        self.value_e - self.cost_e
    }

    pub fn gap_v(&self) -> f64 {
        self.value_v - self.cost_v
    }

    pub fn relative_e(&self) -> f64 {
        self.gap_e() / self.cost_e
    }

    pub fn relative_v(&self) -> f64 {
        self.gap_v() / self.cost_v
    }
}

pub fn entry_gaps(prices: Prices, grid: &TypeGrid, params: &ModelParams, m_e: f64, m_v: f64) -> EntryGaps {
    let agg = aggregates(prices, grid, params);
    gaps_from(&agg, params, m_e, m_v)
}

fn gaps_from(agg: &Aggregates, params: &ModelParams, m_e: f64, m_v: f64) -> EntryGaps {
    EntryGaps {
        value_e: agg.value_e(),
        cost_e: params.kappa_e * m_e.powf(params.eta_e),
        value_v: agg.surplus_v,
        cost_v: params.kappa_v * m_v.powf(params.eta_v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMode {
    /// Masses held fixed; only prices clear.
    FixedSupply { mass_e: f64, effort_supply: f64 },
    /// Masses pinned by free entry, starting from the given guesses.
    FreeEntry { mass_e: f64, effort_supply: f64 },
}

/// Relative market residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub labor: f64,
    pub effort: f64,
    pub entry_e: f64,
    pub entry_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumState {
    pub prices: Prices,
    pub mass_e: f64,
    pub effort_supply: f64,
    pub entrants_e: f64,
    pub entrants_v: f64,
    pub savings: f64,
    pub output: f64,
    pub labor_productivity: f64,
    pub funded_share_vc: f64,
    pub funded_share_bank: f64,
    pub gaps: EntryGaps,
    pub residuals: Residuals,
    pub controls: Controls,
    pub free_entry: bool,
    pub iterations: usize,
    pub converged: bool,
}

impl EquilibriumState {
    fn assemble(
        prices: Prices,
        mass_e: f64,
        effort_supply: f64,
        agg: &Aggregates,
        params: &ModelParams,
        controls: Controls,
        free_entry: bool,
        iterations: usize,
    ) -> EquilibriumState {
        let m_e = entrants_e(mass_e, params);
        let m_v = entrants_v(effort_supply, params);
        let gaps = gaps_from(agg, params, m_e, m_v);
        let labor = mass_e * agg.labor;
        let output = mass_e * agg.output;
        let residuals = Residuals {
            labor: (labor - params.labor) / params.labor,
            effort: (m_e * agg.effort - effort_supply) / effort_supply,
            entry_e: gaps.relative_e(),
            entry_v: gaps.relative_v(),
        };
        let prices_ok = residuals.labor.abs() <= controls.price_tol && residuals.effort.abs() <= controls.price_tol;
        let entry_ok = !free_entry || entry_converged(&gaps, controls.entry_tol);
        EquilibriumState {
            prices,
            mass_e,
            effort_supply,
            entrants_e: m_e,
            entrants_v: m_v,
            savings: m_e * params.invest * (agg.share_bank + agg.share_vc),
            output,
            labor_productivity: output / labor,
            funded_share_vc: agg.share_vc,
            funded_share_bank: agg.share_bank,
            gaps,
            residuals,
            controls,
            free_entry,
            iterations,
            converged: prices_ok && entry_ok,
        }
    }
}

fn entry_converged(gaps: &EntryGaps, tol: f64) -> bool {
    gaps.relative_e().abs() <= tol
        && gaps.relative_v().abs() <= tol
        && gaps.gap_e().abs() <= tol
        && gaps.gap_v().abs() <= tol
}

/// Solves for the stationary equilibrium.
pub fn solve_steady_state(
    params: &ModelParams,
    grid: &TypeGrid,
    mode: SolveMode,
    controls: &Controls,
) -> Result<EquilibriumState, SolveError> {
    params.validate()?;
    match mode {
        SolveMode::FixedSupply { mass_e, effort_supply } => {
            let prices = clear_prices(mass_e, effort_supply, grid, params, controls, None)?;
            let agg = aggregates(prices, grid, params);
            Ok(EquilibriumState::assemble(
                prices,
                mass_e,
                effort_supply,
                &agg,
                params,
                *controls,
                false,
                0,
            ))
        }
        SolveMode::FreeEntry { mass_e, effort_supply } => free_entry(params, grid, mass_e, effort_supply, controls),
    }
}

/// Masses below this are treated as a collapsed market.
const MIN_MASS: f64 = 1e-9;

fn free_entry(
    params: &ModelParams,
    grid: &TypeGrid,
    mut mass_e: f64,
    mut effort_supply: f64,
    controls: &Controls,
) -> Result<EquilibriumState, SolveError> {
    let mut hint = None;
    let mut trace = Vec::new();
    for it in 0..controls.entry_iterations {
        let prices = clear_prices(mass_e, effort_supply, grid, params, controls, hint)?;
        hint = Some(prices);
        let agg = aggregates(prices, grid, params);
        let gaps = gaps_from(
            &agg,
            params,
            entrants_e(mass_e, params),
            entrants_v(effort_supply, params),
        );
        trace.push((gaps.relative_e(), gaps.relative_v()));
        debug!(
            "entry iteration {it}: M={mass_e:.10} H={effort_supply:.10} {prices} gaps=({:.3e}, {:.3e})",
            gaps.relative_e(),
            gaps.relative_v()
        );
        if entry_converged(&gaps, controls.entry_tol) {
            return Ok(EquilibriumState::assemble(
                prices,
                mass_e,
                effort_supply,
                &agg,
                params,
                *controls,
                true,
                it + 1,
            ));
        }
        if !(gaps.value_e > 0.0 && gaps.value_v > 0.0) {
            return Err(SolveError::NonConvergence {
                stage: "free entry (no surplus left to enter for)",
                iterations: it + 1,
                residual: gaps.relative_e().abs().max(gaps.relative_v().abs()),
                trace: Some(IterationTrace {
                    mass_e,
                    effort_supply,
                    gaps: trace,
                }),
            });
        }
        mass_e *= (gaps.value_e / gaps.cost_e).powf(controls.damping);
        effort_supply *= (gaps.value_v / gaps.cost_v).powf(controls.damping);
        if !(mass_e > MIN_MASS && effort_supply > MIN_MASS) {
            // one side of the market is emptying out; no interior steady state
            return Err(SolveError::NonConvergence {
                stage: "free entry (a mass collapsed towards zero)",
                iterations: it + 1,
                residual: gaps.relative_e().abs().max(gaps.relative_v().abs()),
                trace: Some(IterationTrace {
                    mass_e,
                    effort_supply,
                    gaps: trace,
                }),
            });
        }
    }
    let residual = trace
        .last()
        .map(|&(a, b)| a.abs().max(b.abs()))
        .unwrap_or(f64::INFINITY);
    Err(SolveError::NonConvergence {
        stage: "free entry",
        iterations: controls.entry_iterations,
        residual,
        trace: Some(IterationTrace {
            mass_e,
            effort_supply,
            gaps: trace,
        }),
    })
}

/// One labeled quantity of a steady-state summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub label: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    /// `w, v, H, M, Y/L` in that order.
    pub benchmark: Vec<ReportRow>,
    pub diagnostics: Vec<ReportRow>,
}

pub const BENCHMARK_LABELS: [&str; 5] = ["w", "v", "H", "M", "Y/L"];

pub fn aggregate_report(state: &EquilibriumState) -> Result<SteadyStateReport, SolveError> {
    if !state.converged {
        return Err(SolveError::NotConverged);
    }
    let row = |label, value| ReportRow { label, value };
    Ok(SteadyStateReport {
        benchmark: vec![
            row("w", state.prices.w),
            row("v", state.prices.v),
            row("H", state.effort_supply),
            row("M", state.mass_e),
            row("Y/L", state.labor_productivity),
        ],
        diagnostics: vec![
            row("m_e", state.entrants_e),
            row("m_v", state.entrants_v),
            row("S", state.savings),
            row("Y", state.output),
            row("share_vc", state.funded_share_vc),
            row("share_bank", state.funded_share_bank),
            row("value_e", state.gaps.value_e),
            row("cost_e", state.gaps.cost_e),
            row("value_v", state.gaps.value_v),
            row("cost_v", state.gaps.cost_v),
            row("residual_labor", state.residuals.labor),
            row("residual_effort", state.residuals.effort),
            row("residual_entry_e", state.residuals.entry_e),
            row("residual_entry_v", state.residuals.entry_v),
            row("iterations", state.iterations as f64),
        ],
    })
}
