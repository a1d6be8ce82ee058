use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("chi + theta + beta = {0}, expected 1")]
    SharesDoNotSumToOne(f64),
    #[error("{name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("{0} is not finite")]
    NonFinite(&'static str),
    #[error("unknown parameter name `{0}`")]
    UnknownName(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("resolution {0} < 2")]
    Resolution(usize),
    #[error("support [{lo}, {hi}] must be positive and nondegenerate")]
    Support { lo: f64, hi: f64 },
    #[error("lognormal scale must be positive, got {0}")]
    Scale(f64),
    #[error("integrand is not finite at node (z={z}, c={c})")]
    NonFinite { z: f64, c: f64 },
}

/// Residual snapshot carried by a failed fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub mass_e: f64,
    pub effort_supply: f64,
    /// Relative entry gaps `(value/cost - 1)` per iteration.
    pub gaps: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no sign change for {market} market in [{lo:e}, {hi:e}]")]
    BracketFailure { market: &'static str, lo: f64, hi: f64 },
    #[error("{stage} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        residual: f64,
        trace: Option<IterationTrace>,
    },
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("state is not converged")]
    NotConverged,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("argmax stuck on search boundary after {0} expansions")]
    BoundaryArgmax(usize),
    #[error("best responses did not settle after {0} rounds")]
    NoConvergence(usize),
}
