//! Structural parameters, prices and firm types.

use std::fmt;

use log::warn;

use crate::error::ParamError;

/// Tolerance on `chi + theta + beta = 1`.
const SHARE_SUM_TOL: f64 = 1e-12;

/// All structural constants of the economy.
///
/// Technology: `y = z^chi F^theta l^beta` with `F` a CES composite of VC
/// effort `h` (weight `gamma`) and founder effort `f`, substitution
/// elasticity `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Output elasticity of productivity `z`.
    pub chi: f64,
    /// Output elasticity of the management composite `F`.
    pub theta: f64,
    /// Output elasticity of labor.
    pub beta: f64,
    /// Elasticity of substitution between VC and founder effort (> 1).
    pub sigma: f64,
    /// Weight on VC effort inside `F`.
    pub gamma: f64,
    /// VC bargaining power.
    pub alpha: f64,
    /// Project success probability.
    pub epsilon: f64,
    /// Risk-free rate.
    pub r: f64,
    /// Entrepreneur survival rate.
    pub s_e: f64,
    /// VC continuation rate.
    pub s_v: f64,
    /// Upfront investment per project, in goods.
    pub invest: f64,
    pub kappa_e: f64,
    pub kappa_v: f64,
    pub eta_e: f64,
    pub eta_v: f64,
    /// Labor endowment.
    pub labor: f64,
}

/// Names accepted by [`ModelParams::get`] and [`ModelParams::set`].
pub const PARAM_NAMES: [&str; 16] = [
    "chi", "theta", "beta", "sigma", "gamma", "alpha", "epsilon", "r", "s_e", "s_v", "I", "kappa_e", "kappa_v",
    "eta_e", "eta_v", "L",
];

impl Default for ModelParams {
    /// Benchmark calibration: technology and survival rates from the
    /// empirical parameter table, unit entry costs, `I = 1`, `r = 0.05`.
    /// `alpha = 0.6` rather than one half: at one half VC financing beats
    /// the bank at every `c`, so there is no cost cutoff to move.
    fn default() -> Self {
        ModelParams {
            chi: 0.3,
            theta: 0.1,
            beta: 0.6,
            sigma: 5.0,
            gamma: 1.0,
            alpha: 0.6,
            epsilon: 0.57,
            r: 0.05,
            s_e: 0.96,
            s_v: 0.8,
            invest: 1.0,
            kappa_e: 1.0,
            kappa_v: 1.0,
            eta_e: 1.0,
            eta_v: 1.0,
            labor: 1.0,
        }
    }
}

impl ModelParams {
    /// Checks every invariant. Returns `Ok(true)` when the sign conditions
    /// for VC effort comparative statics (`theta/chi < sigma - 1`) hold,
    /// `Ok(false)` (with a logged warning) when they are not guaranteed.
    pub fn validate(&self) -> Result<bool, ParamError> {
        for name in PARAM_NAMES {
            let v = self.get(name).expect("known name");
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        let shares = self.chi + self.theta + self.beta;
        if (shares - 1.0).abs() > SHARE_SUM_TOL {
            return Err(ParamError::SharesDoNotSumToOne(shares));
        }
        positive("chi", self.chi)?;
        positive("theta", self.theta)?;
        positive("beta", self.beta)?;
        if self.sigma <= 1.0 {
            return Err(ParamError::OutOfRange {
                name: "sigma",
                value: self.sigma,
                range: "(1, inf)",
            });
        }
        positive("gamma", self.gamma)?;
        open_unit("alpha", self.alpha)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(ParamError::OutOfRange {
                name: "epsilon",
                value: self.epsilon,
                range: "(0, 1]",
            });
        }
        if self.r < 0.0 {
            return Err(ParamError::OutOfRange {
                name: "r",
                value: self.r,
                range: "[0, inf)",
            });
        }
        half_open_unit("s_e", self.s_e)?;
        half_open_unit("s_v", self.s_v)?;
        if self.invest < 0.0 {
            return Err(ParamError::OutOfRange {
                name: "I",
                value: self.invest,
                range: "[0, inf)",
            });
        }
        positive("kappa_e", self.kappa_e)?;
        positive("kappa_v", self.kappa_v)?;
        positive("eta_e", self.eta_e)?;
        positive("eta_v", self.eta_v)?;
        positive("L", self.labor)?;

        let guaranteed = self.prop1_condition_holds();
        if !guaranteed {
            warn!(
                "theta/chi = {} >= sigma - 1 = {}: monotonicity of VC effort in c and v is not guaranteed",
                self.theta / self.chi,
                self.sigma - 1.0
            );
        }
        Ok(guaranteed)
    }

    /// `theta/chi < sigma - 1`.
    pub fn prop1_condition_holds(&self) -> bool {
        self.theta / self.chi < self.sigma - 1.0
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "chi" => self.chi,
            "theta" => self.theta,
            "beta" => self.beta,
            "sigma" => self.sigma,
            "gamma" => self.gamma,
            "alpha" => self.alpha,
            "epsilon" => self.epsilon,
            "r" => self.r,
            "s_e" => self.s_e,
            "s_v" => self.s_v,
            "I" => self.invest,
            "kappa_e" => self.kappa_e,
            "kappa_v" => self.kappa_v,
            "eta_e" => self.eta_e,
            "eta_v" => self.eta_v,
            "L" => self.labor,
            _ => return None,
        })
    }

    /// Sets one parameter by name. Does not re-validate.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), ParamError> {
        let slot = match name {
            "chi" => &mut self.chi,
            "theta" => &mut self.theta,
            "beta" => &mut self.beta,
            "sigma" => &mut self.sigma,
            "gamma" => &mut self.gamma,
            "alpha" => &mut self.alpha,
            "epsilon" => &mut self.epsilon,
            "r" => &mut self.r,
            "s_e" => &mut self.s_e,
            "s_v" => &mut self.s_v,
            "I" => &mut self.invest,
            "kappa_e" => &mut self.kappa_e,
            "kappa_v" => &mut self.kappa_v,
            "eta_e" => &mut self.eta_e,
            "eta_v" => &mut self.eta_v,
            "L" => &mut self.labor,
            _ => return Err(ParamError::UnknownName(name.to_string())),
        };
        *slot = value;
        Ok(())
    }

    /// Returns a copy with `name` replaced by `value`, validated.
    pub fn with(&self, name: &str, value: f64) -> Result<ModelParams, ParamError> {
        let mut out = *self;
        out.set(name, value)?;
        out.validate()?;
        Ok(out)
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            value,
            range: "(0, inf)",
        })
    }
}

fn open_unit(name: &'static str, value: f64) -> Result<(), ParamError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            value,
            range: "(0, 1)",
        })
    }
}

fn half_open_unit(name: &'static str, value: f64) -> Result<(), ParamError> {
    if (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            name,
            value,
            range: "[0, 1)",
        })
    }
}

/// A project type: productivity `z` and founder effort cost `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmType {
    pub z: f64,
    pub c: f64,
}

impl FirmType {
    pub fn new(z: f64, c: f64) -> Result<Self, ParamError> {
        if !(z.is_finite() && z > 0.0) {
            return Err(ParamError::OutOfRange {
                name: "z",
                value: z,
                range: "(0, inf)",
            });
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(ParamError::OutOfRange {
                name: "c",
                value: c,
                range: "(0, inf)",
            });
        }
        Ok(FirmType { z, c })
    }
}

/// Wage and shadow cost of VC effort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prices {
    pub w: f64,
    pub v: f64,
}

impl Prices {
    pub fn new(w: f64, v: f64) -> Result<Self, ParamError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ParamError::OutOfRange {
                name: "w",
                value: w,
                range: "(0, inf)",
            });
        }
        if !(v.is_finite() && v > 0.0) {
            return Err(ParamError::OutOfRange {
                name: "v",
                value: v,
                range: "(0, inf)",
            });
        }
        Ok(Prices { w, v })
    }
}

impl fmt::Display for Prices {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w={:.6} v={:.6}", self.w, self.v)
    }
}

/// Discounting implied by the risk-free rate, success probability and
/// survival.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountBundle {
    /// One-period discount factor `1/(1+r)`.
    pub delta: f64,
    /// Present value multiplier on per-period profit of a project at entry:
    /// `delta*epsilon / (1 - delta*s_e)`.
    pub project: f64,
    /// Zero-profit bank lending rate.
    pub bank_rate: f64,
}

pub fn discount_bundle(params: &ModelParams) -> DiscountBundle {
    let delta = 1.0 / (1.0 + params.r);
    let project = delta * params.epsilon / (1.0 - delta * params.s_e);
    let bank_rate = 1.0 / (delta * params.epsilon) - 1.0;
    DiscountBundle {
        delta,
        project,
        bank_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let p = ModelParams::default();
        assert_eq!(p.validate(), Ok(true));
    }

    #[test]
    fn rejects_shares_off_by_more_than_tolerance() {
        let p = ModelParams {
            chi: 0.31,
            ..ModelParams::default()
        };
        assert!(matches!(p.validate(), Err(ParamError::SharesDoNotSumToOne(_))));
    }

    #[test]
    fn rejects_sigma_at_most_one() {
        for sigma in [1.0, 0.9] {
            let p = ModelParams {
                sigma,
                ..ModelParams::default()
            };
            assert!(matches!(
                p.validate(),
                Err(ParamError::OutOfRange { name: "sigma", .. })
            ));
        }
    }

    #[test]
    fn rejects_out_of_range_rates() {
        let base = ModelParams::default();
        assert!(base.with("alpha", 1.0).is_err());
        assert!(base.with("alpha", 0.0).is_err());
        assert!(base.with("epsilon", 0.0).is_err());
        assert!(base.with("epsilon", 1.0).is_ok());
        assert!(base.with("s_e", 1.0).is_err());
        assert!(base.with("s_v", -0.1).is_err());
        assert!(base.with("r", -0.01).is_err());
        assert!(base.with("kappa_v", 0.0).is_err());
        assert!(base.with("L", -1.0).is_err());
        assert!(base.with("I", 0.0).is_ok());
        assert!(base.with("r", f64::NAN).is_err());
    }

    #[test]
    fn flags_weak_substitution() {
        // theta/chi = 1/3 >= sigma - 1 = 0.2
        let p = ModelParams {
            sigma: 1.2,
            ..ModelParams::default()
        };
        assert_eq!(p.validate(), Ok(false));
    }

    #[test]
    fn unknown_name() {
        let mut p = ModelParams::default();
        assert!(matches!(p.set("zeta", 1.0), Err(ParamError::UnknownName(_))));
        for name in PARAM_NAMES {
            let v = p.get(name).unwrap();
            p.set(name, v).unwrap();
        }
        assert_eq!(p, ModelParams::default());
    }

    #[test]
    fn discount_identity_case() {
        let p = ModelParams {
            r: 0.0,
            epsilon: 1.0,
            s_e: 0.0,
            ..ModelParams::default()
        };
        let d = discount_bundle(&p);
        assert_eq!(d.delta, 1.0);
        assert_eq!(d.project, 1.0);
        assert_eq!(d.bank_rate, 0.0);
    }

    #[test]
    fn discount_two_period_case() {
        let p = ModelParams {
            r: 0.05,
            epsilon: 0.57,
            s_e: 0.0,
            ..ModelParams::default()
        };
        let d = discount_bundle(&p);
        assert!((d.project - 0.57 / 1.05).abs() < 1e-15);
        assert!((d.project - 0.542857).abs() < 1e-6);
    }

    #[test]
    fn discount_with_survival() {
        let p = ModelParams {
            r: 0.05,
            epsilon: 0.57,
            s_e: 0.96,
            ..ModelParams::default()
        };
        let d = discount_bundle(&p);
        let expected = (0.57 / 1.05) / (1.0 - 0.96 / 1.05);
        assert!((d.project - expected).abs() < 1e-12);
        assert!((d.project - 6.3333).abs() < 1e-4);
        assert!(((1.0 + d.bank_rate) * d.delta * p.epsilon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn firm_type_and_prices_reject_nonpositive() {
        assert!(FirmType::new(0.0, 1.0).is_err());
        assert!(FirmType::new(1.0, f64::INFINITY).is_err());
        assert!(Prices::new(1.0, 0.0).is_err());
        assert!(Prices::new(1.0, 1.0).is_ok());
    }
}
