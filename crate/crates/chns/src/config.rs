//! Run configuration: scenario defaults, a `key = value` file and command-line overrides.

use std::fs;
use std::path::Path;

use chns_core::imex::Scheme;
use chns_core::linsolve::PrecondKind;
use chns_core::scenario::ScenarioName;

use crate::error::{AppError, AppResult};

/// Values read from a config file or the command line; `None` keeps the scenario default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub cp: Option<f64>,
    pub eps: Option<f64>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub g: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub cfl: Option<f64>,
    pub t_final: Option<f64>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
    pub precond: Option<PrecondKind>,
    pub scenario: Option<ScenarioName>,
}

fn parse_precond(s: &str) -> AppResult<PrecondKind> {
    match s {
        "none" => Ok(PrecondKind::None),
        "mg" => Ok(PrecondKind::Multigrid),
        _ => Err(AppError::Config(format!("unknown preconditioner `{s}` (expected none or mg)"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> AppResult<T> {
    value.parse().map_err(|_| AppError::Config(format!("invalid value for `{key}`: `{value}`")))
}

impl Overrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> AppResult<Self> {
        let mut o = Overrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("line {}: expected key = value, got `{line}`", n + 1)))?;
            o.set(key.trim(), value.trim())?;
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> AppResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> AppResult<()> {
        match key {
            "gamma" => self.gamma = Some(parse_num(key, value)?),
            "cp" | "Cp" => self.cp = Some(parse_num(key, value)?),
            "eps" => self.eps = Some(parse_num(key, value)?),
            "nu" => self.nu = Some(parse_num(key, value)?),
            "lambda" => self.lambda = Some(parse_num(key, value)?),
            "g" => self.g = Some(parse_num(key, value)?),
            "tol" => self.tol = Some(parse_num(key, value)?),
            "max_iter" => self.max_iter = Some(parse_num(key, value)?),
            "cfl" => self.cfl = Some(parse_num(key, value)?),
            "T" | "t_final" => self.t_final = Some(parse_num(key, value)?),
            "M" => self.m = Some(parse_num(key, value)?),
            "seed" => self.seed = Some(parse_num(key, value)?),
            "scheme" => self.scheme = Some(value.parse()?),
            "precond" => self.precond = Some(parse_precond(value)?),
            "scenario" => self.scenario = Some(value.parse()?),
            _ => return Err(AppError::Config(format!("unknown configuration key `{key}`"))),
        }
        Ok(())
    }

    /// `self` with every value present in `other` replaced.
    pub fn merged(self, other: &Overrides) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Overrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(gamma, cp, eps, nu, lambda, g, tol, max_iter, cfl, t_final, m, seed, scheme, precond, scenario)
    }
}

pub fn parse_precond_flag(s: &str) -> Result<PrecondKind, String> {
    parse_precond(s).map_err(|e| e.to_string())
}

/// Comma-separated list of times.
pub fn parse_times(s: &str) -> AppResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_num::<f64>("snapshots", t))
        .collect()
}
