//! Flat `section.key = value` configuration.
//!
//! Every key is optional; an empty file yields the benchmark setup with
//! the three default experiments. Numbers are echoed with `{:?}` so the
//! effective-config file reloads to an identical config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;
use vcge_core::error::{GridError, ParamError};
use vcge_core::params::PARAM_NAMES;
use vcge_core::{build_grid, Controls, Family, ModelParams, Support, TypeGrid};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub family: Family,
    pub z_support: Support,
    pub c_support: Support,
    pub nz: usize,
    pub nc: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        let s = Support { lo: 0.5, hi: 1.5 };
        GridSpec {
            family: Family::Uniform,
            z_support: s,
            c_support: s,
            nz: 101,
            nc: 101,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<TypeGrid, GridError> {
        build_grid(self.family, self.z_support, self.c_support, (self.nz, self.nc))
    }
}

/// One experiment: a single parameter set to a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub label: String,
    pub param: String,
    pub value: f64,
}

impl Perturbation {
    pub fn apply(&self, base: &ModelParams) -> Result<ModelParams, ParamError> {
        base.with(&self.param, self.value)
    }
}

/// The three experiments run when the config names none.
pub fn default_perturbations(p: &ModelParams) -> Vec<Perturbation> {
    let make = |label: &str, param: &str, value| Perturbation {
        label: label.to_string(),
        param: param.to_string(),
        value,
    };
    vec![
        make("lower_I", "I", 0.8 * p.invest),
        make("lower_r", "r", 0.02),
        make("lower_kappa_v", "kappa_v", 0.5 * p.kappa_v),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub summary: bool,
    pub policy: bool,
    pub region: bool,
}

impl Default for Emission {
    fn default() -> Self {
        Emission {
            summary: true,
            policy: true,
            region: true,
        }
    }
}

/// Initial guesses for the free-entry loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Start {
    pub mass_e: f64,
    pub effort_supply: f64,
}

impl Default for Start {
    fn default() -> Self {
        Start {
            mass_e: 3.0,
            effort_supply: 1.0,
        }
    }
}

/// Transition run: initial masses and horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionSpec {
    pub periods: usize,
    pub mass_e0: f64,
    pub effort0: f64,
}

impl Default for TransitionSpec {
    fn default() -> Self {
        TransitionSpec {
            periods: 200,
            mass_e0: 0.0,
            effort0: 0.0,
        }
    }
}

/// Oracle suite settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySpec {
    pub seed: u64,
    pub draws: usize,
    /// Points per axis of the derivative lattice.
    pub lattice: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            seed: 20240607,
            draws: 1_000_000,
            lattice: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub controls: Controls,
    pub start: Start,
    pub perturbations: Vec<Perturbation>,
    pub out_dir: PathBuf,
    pub emit: Emission,
    pub transition: TransitionSpec,
    pub verify: VerifySpec,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let params = ModelParams::default();
        ScenarioConfig {
            params,
            grid: GridSpec::default(),
            controls: Controls::default(),
            start: Start::default(),
            perturbations: default_perturbations(&params),
            out_dir: PathBuf::from("out"),
            emit: Emission::default(),
            transition: TransitionSpec::default(),
            verify: VerifySpec::default(),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Raw `key -> (value, line)` pairs.
fn tokenize(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Parse {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if !key.contains('.') {
            return Err(ConfigError::Parse {
                line,
                message: format!("key `{key}` has no section prefix"),
            });
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
        out.push((key.to_string(), value.to_string(), line));
    }
    Ok(out)
}

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x: f64 = value
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not a number")))?;
    if !x.is_finite() {
        return Err(invalid(key, "must be finite"));
    }
    Ok(x)
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x = number(key, value)?;
    if x <= 0.0 {
        return Err(invalid(key, "must be positive"));
    }
    Ok(x)
}

fn count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("`{value}` is not a nonnegative integer")))
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, format!("`{value}` is not true or false"))),
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let entries = tokenize(text)?;
    let mut cfg = ScenarioConfig::default();
    let mut family = "uniform".to_string();
    let mut lognormal = [0.0, 1.0, 0.0, 1.0];
    let (mut z, mut c) = (
        (cfg.grid.z_support.lo, cfg.grid.z_support.hi),
        (cfg.grid.c_support.lo, cfg.grid.c_support.hi),
    );
    let mut perturbations: Vec<Perturbation> = Vec::new();

    for (key, value, line) in &entries {
        let (section, rest) = key.split_once('.').expect("tokenize checked the prefix");
        let v = value.as_str();
        match (section, rest) {
            ("params", name) => {
                if !PARAM_NAMES.contains(&name) {
                    return Err(invalid(key, "unknown parameter"));
                }
                cfg.params
                    .set(name, number(key, v)?)
                    .map_err(|e| invalid(key, e.to_string()))?;
            }
            ("grid", "family") => family = v.to_string(),
            ("grid", "z_lo") => z.0 = number(key, v)?,
            ("grid", "z_hi") => z.1 = number(key, v)?,
            ("grid", "c_lo") => c.0 = number(key, v)?,
            ("grid", "c_hi") => c.1 = number(key, v)?,
            ("grid", "nz") => cfg.grid.nz = count(key, v)?,
            ("grid", "nc") => cfg.grid.nc = count(key, v)?,
            ("grid", "mu_z") => lognormal[0] = number(key, v)?,
            ("grid", "s_z") => lognormal[1] = positive(key, v)?,
            ("grid", "mu_c") => lognormal[2] = number(key, v)?,
            ("grid", "s_c") => lognormal[3] = positive(key, v)?,
            ("solver", "price_tol") => cfg.controls.price_tol = positive(key, v)?,
            ("solver", "entry_tol") => cfg.controls.entry_tol = positive(key, v)?,
            ("solver", "damping") => {
                let d = positive(key, v)?;
                if d > 1.0 {
                    return Err(invalid(key, "must lie in (0, 1]"));
                }
                cfg.controls.damping = d;
            }
            ("solver", "price_iterations") => cfg.controls.price_iterations = count(key, v)?,
            ("solver", "entry_iterations") => cfg.controls.entry_iterations = count(key, v)?,
            ("solver", "bracket_doublings") => cfg.controls.bracket_doublings = count(key, v)?,
            ("solver", "mass_e_guess") => cfg.start.mass_e = positive(key, v)?,
            ("solver", "effort_guess") => cfg.start.effort_supply = positive(key, v)?,
            ("perturb", rest) => {
                let Some((label, param)) = rest.split_once('.') else {
                    return Err(ConfigError::Parse {
                        line: *line,
                        message: format!("expected `perturb.<label>.<param>`, got `{key}`"),
                    });
                };
                if label.is_empty()
                    || !label
                        .chars()
                        .all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-')
                {
                    return Err(invalid(key, "labels use letters, digits, `_` and `-`"));
                }
                if !PARAM_NAMES.contains(&param) {
                    return Err(invalid(key, "unknown parameter"));
                }
                if perturbations.iter().any(|p| p.label == label) {
                    return Err(invalid(key, format!("scenario `{label}` already changes a parameter")));
                }
                perturbations.push(Perturbation {
                    label: label.to_string(),
                    param: param.to_string(),
                    value: number(key, v)?,
                });
            }
            ("output", "dir") => cfg.out_dir = PathBuf::from(v),
            ("output", "summary") => cfg.emit.summary = flag(key, v)?,
            ("output", "policy") => cfg.emit.policy = flag(key, v)?,
            ("output", "region") => cfg.emit.region = flag(key, v)?,
            ("transition", "periods") => cfg.transition.periods = count(key, v)?,
            ("transition", "mass_e0") => cfg.transition.mass_e0 = nonnegative(key, v)?,
            ("transition", "effort0") => cfg.transition.effort0 = nonnegative(key, v)?,
            ("verify", "seed") => cfg.verify.seed = v.parse().map_err(|_| invalid(key, "not an unsigned integer"))?,
            ("verify", "draws") => cfg.verify.draws = count(key, v)?,
            ("verify", "lattice") => cfg.verify.lattice = count(key, v)?,
            _ => return Err(invalid(key, "unknown key")),
        }
    }

    cfg.params
        .validate()
        .map_err(|e| invalid(&param_key(&e), e.to_string()))?;
    cfg.grid.family = match family.as_str() {
        "uniform" => Family::Uniform,
        "lognormal" => Family::TruncatedLognormal {
            mu_z: lognormal[0],
            s_z: lognormal[1],
            mu_c: lognormal[2],
            s_c: lognormal[3],
        },
        other => return Err(invalid("grid.family", format!("`{other}` is not uniform or lognormal"))),
    };
    cfg.grid.z_support = Support::new(z.0, z.1).map_err(|e| invalid("grid.z_lo", e.to_string()))?;
    cfg.grid.c_support = Support::new(c.0, c.1).map_err(|e| invalid("grid.c_lo", e.to_string()))?;
    for (key, n) in [("grid.nz", cfg.grid.nz), ("grid.nc", cfg.grid.nc)] {
        if n < 2 {
            return Err(invalid(key, "resolution must be at least 2"));
        }
    }
    for (key, n) in [
        ("solver.price_iterations", cfg.controls.price_iterations),
        ("solver.entry_iterations", cfg.controls.entry_iterations),
        ("transition.periods", cfg.transition.periods),
        ("verify.lattice", cfg.verify.lattice),
    ] {
        if n == 0 {
            return Err(invalid(key, "must be at least 1"));
        }
    }
    if perturbations.is_empty() {
        perturbations = default_perturbations(&cfg.params);
    }
    for p in &perturbations {
        p.apply(&cfg.params)
            .map_err(|e| invalid(&format!("perturb.{}.{}", p.label, p.param), e.to_string()))?;
    }
    cfg.perturbations = perturbations;
    Ok(cfg)
}

fn nonnegative(key: &str, value: &str) -> Result<f64, ConfigError> {
    let x = number(key, value)?;
    if x < 0.0 {
        return Err(invalid(key, "must be nonnegative"));
    }
    Ok(x)
}

/// Config key blamed for a parameter-validation failure.
fn param_key(e: &ParamError) -> String {
    match e {
        ParamError::OutOfRange { name, .. } | ParamError::NonFinite(name) => format!("params.{name}"),
        ParamError::UnknownName(name) => format!("params.{name}"),
        ParamError::SharesDoNotSumToOne(_) => "params.chi".to_string(),
    }
}

impl ScenarioConfig {
    /// Every setting, one `key = value` line each, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        for name in PARAM_NAMES {
            put(
                &format!("params.{name}"),
                format!("{:?}", self.params.get(name).expect("listed name")),
            );
        }
        put("grid.family", self.grid.family.name().to_string());
        if let Family::TruncatedLognormal { mu_z, s_z, mu_c, s_c } = self.grid.family {
            put("grid.mu_z", format!("{mu_z:?}"));
            put("grid.s_z", format!("{s_z:?}"));
            put("grid.mu_c", format!("{mu_c:?}"));
            put("grid.s_c", format!("{s_c:?}"));
        }
        put("grid.z_lo", format!("{:?}", self.grid.z_support.lo));
        put("grid.z_hi", format!("{:?}", self.grid.z_support.hi));
        put("grid.c_lo", format!("{:?}", self.grid.c_support.lo));
        put("grid.c_hi", format!("{:?}", self.grid.c_support.hi));
        put("grid.nz", self.grid.nz.to_string());
        put("grid.nc", self.grid.nc.to_string());
        let c = &self.controls;
        put("solver.price_tol", format!("{:?}", c.price_tol));
        put("solver.entry_tol", format!("{:?}", c.entry_tol));
        put("solver.damping", format!("{:?}", c.damping));
        put("solver.price_iterations", c.price_iterations.to_string());
        put("solver.entry_iterations", c.entry_iterations.to_string());
        put("solver.bracket_doublings", c.bracket_doublings.to_string());
        put("solver.mass_e_guess", format!("{:?}", self.start.mass_e));
        put("solver.effort_guess", format!("{:?}", self.start.effort_supply));
        for p in &self.perturbations {
            put(&format!("perturb.{}.{}", p.label, p.param), format!("{:?}", p.value));
        }
        put("output.dir", self.out_dir.display().to_string());
        put("output.summary", self.emit.summary.to_string());
        put("output.policy", self.emit.policy.to_string());
        put("output.region", self.emit.region.to_string());
        put("transition.periods", self.transition.periods.to_string());
        put("transition.mass_e0", format!("{:?}", self.transition.mass_e0));
        put("transition.effort0", format!("{:?}", self.transition.effort0));
        put("verify.seed", self.verify.seed.to_string());
        put("verify.draws", self.verify.draws.to_string());
        put("verify.lattice", self.verify.lattice.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default() {
        assert_eq!(parse_config("").unwrap(), ScenarioConfig::default());
        assert_eq!(parse_config("# nothing\n\n   \n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn default_experiments() {
        let cfg = ScenarioConfig::default();
        let labels: Vec<_> = cfg.perturbations.iter().map(|p| (p.param.as_str(), p.value)).collect();
        assert_eq!(labels, vec![("I", 0.8), ("r", 0.02), ("kappa_v", 0.5)]);
    }

    #[test]
    fn experiments_follow_the_base_parameters() {
        let cfg = parse_config("params.I = 2.0\nparams.kappa_v = 3\n").unwrap();
        assert_eq!(cfg.perturbations[0].value, 1.6);
        assert_eq!(cfg.perturbations[2].value, 1.5);
    }

    #[test]
    fn sigma_below_one_names_the_key() {
        match parse_config("params.sigma = 0.9") {
            Err(ConfigError::Validation { key, .. }) => assert_eq!(key, "params.sigma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_the_line() {
        match parse_config("# header\nparams.r = 0.04\nthis line is wrong\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_config("params.r = 0.04\nparams.r = 0.03\n") {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_values_name_the_key() {
        for (text, key) in [
            ("params.alpha = lots", "params.alpha"),
            ("params.bogus = 1", "params.bogus"),
            ("grid.nz = 1", "grid.nz"),
            ("output.policy = yes", "output.policy"),
            ("perturb.x.nope = 1", "perturb.x.nope"),
            ("perturb.x.sigma = 0.5", "perturb.x.sigma"),
            ("solver.damping = 2", "solver.damping"),
            ("nosuch.key = 1", "nosuch.key"),
        ] {
            match parse_config(text) {
                Err(ConfigError::Validation { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn explicit_perturbations_replace_the_defaults() {
        let cfg = parse_config("perturb.cheap.kappa_v = 0.25 # one experiment\n").unwrap();
        assert_eq!(
            cfg.perturbations,
            vec![Perturbation {
                label: "cheap".into(),
                param: "kappa_v".into(),
                value: 0.25
            }]
        );
    }

    #[test]
    fn text_round_trips() {
        let text = "params.alpha = 0.65\nparams.I = 0.7\ngrid.family = lognormal\ngrid.s_z = 0.3\n\
                    grid.nz = 31\nperturb.a.gamma = 0.123456789012345\noutput.dir = some/where\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
        let default = ScenarioConfig::default();
        assert_eq!(parse_config(&default.to_text()).unwrap(), default);
    }
}
