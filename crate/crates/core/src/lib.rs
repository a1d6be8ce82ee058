//! Stationary general equilibrium of venture-capitalist effort.
//!
//! Entrepreneurs with heterogeneous productivity `z` and effort cost `c`
//! finance a fixed investment either with a bank (solo founder effort) or
//! with a VC who contributes effort of its own under Nash bargaining and
//! double moral hazard. Wages clear the labor market, a shadow cost clears
//! the market for VC effort, and free entry pins down the masses of
//! entrepreneurs and VC effort.
//!
//! - [`model`]: closed-form per-type policies and feasibility regions.
//! - [`distribution`]: the type distribution and quadrature.
//! - [`equilibrium`]: market clearing and the free-entry fixed point.
//! - [`dynamics`]: laws of motion and transition paths.
//! - [`oracle`]: brute-force checks of the closed forms.

pub mod distribution;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod oracle;
pub mod params;

pub use distribution::{build_grid, Family, Support, TypeGrid};
pub use equilibrium::{solve_steady_state, Controls, EquilibriumState, SolveMode};
pub use error::{GridError, OracleError, ParamError, SolveError};
pub use model::{financing_choice, MicroPolicy, Mode};
pub use params::{discount_bundle, DiscountBundle, FirmType, ModelParams, Prices};
