//! Run configuration in flat `key = value` text.
//!
//! ```text
//! # lid-driven cavity, quadratic pressures
//! case = cavity
//! k_prime = 2
//! levels = 8, 16, 32
//! strategies = Ideal(A,Q), Diag(A,Q), ic0_pcg_aq
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors.

use std::path::Path;

use divstokes::assembly::default_penalty;
use divstokes::krylov::{InnerOptions, MinresOptions, ResidualNorm, Strategy};

use crate::{BenchError, CaseKind, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CaseConfig {
    pub case: CaseKind,
    pub k_prime: usize,
    /// Elements per direction, one entry per mesh level.
    pub levels: Vec<usize>,
    pub nu: f64,
    pub c_pen: f64,
    pub strategies: Vec<Strategy>,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_iter: usize,
    pub stop_norm: ResidualNorm,
    /// Gauss points per direction; `None` keeps the assembly default.
    pub quad_points: Option<usize>,
    /// Limiting eigenvalues of the preconditioned operator for each
    /// strategy with fixed blocks.
    pub spectra: bool,
    /// Inf-sup and boundedness constants per level.
    pub infsup: bool,
    /// Pointwise divergence of every discrete velocity.
    pub divcheck: bool,
}

impl CaseConfig {
    /// Defaults for everything except the case, levels and strategies.
    pub fn new(case: CaseKind, k_prime: usize, levels: Vec<usize>, strategies: Vec<Strategy>) -> Self {
        Self {
            case,
            k_prime,
            levels,
            nu: 1.0,
            c_pen: default_penalty(k_prime),
            strategies,
            outer_tol: 1e-12,
            inner_tol: 1e-6,
            max_iter: 10_000,
            stop_norm: ResidualNorm::Preconditioned,
            quad_points: None,
            spectra: false,
            infsup: false,
            divcheck: false,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Raw::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| BenchError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            raw.set(key.trim(), value.trim(), line_no)?;
        }
        raw.finish()
    }

    pub fn minres_options(&self) -> MinresOptions {
        MinresOptions {
            tol: self.outer_tol,
            max_iter: self.max_iter,
            track_true_residual: false,
            stop_norm: self.stop_norm,
        }
    }

    pub fn inner_options(&self) -> InnerOptions {
        InnerOptions {
            tol: self.inner_tol,
            ..InnerOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(BenchError::Config(m));
        if self.levels.is_empty() {
            return err("no levels".into());
        }
        if self.strategies.is_empty() {
            return err("no strategies".into());
        }
        if self.k_prime < 1 {
            return err(format!("k_prime must be at least 1, got {}", self.k_prime));
        }
        for (name, tol) in [("outer_tol", self.outer_tol), ("inner_tol", self.inner_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return err(format!("{name} must lie in (0, 1), got {tol}"));
            }
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return err(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.c_pen > 0.0 && self.c_pen.is_finite()) {
            return err(format!("c_pen must be positive, got {}", self.c_pen));
        }
        if self.max_iter == 0 {
            return err("max_iter must be positive".into());
        }
        if self.quad_points == Some(0) {
            return err("quad_points must be positive".into());
        }
        if let Some(&n) = self.levels.iter().find(|&&n| n == 0) {
            return err(format!("level {n} has no elements"));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Raw {
    case: Option<CaseKind>,
    k_prime: Option<usize>,
    levels: Option<Vec<usize>>,
    nu: Option<f64>,
    c_pen: Option<f64>,
    strategies: Option<Vec<Strategy>>,
    outer_tol: Option<f64>,
    inner_tol: Option<f64>,
    max_iter: Option<usize>,
    stop_norm: Option<ResidualNorm>,
    quad_points: Option<usize>,
    spectra: Option<bool>,
    infsup: Option<bool>,
    divcheck: Option<bool>,
}

fn parse_value<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T> {
    value.parse().map_err(|_| BenchError::Parse {
        line,
        msg: format!("invalid {what} `{value}`"),
    })
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(BenchError::Parse {
            line,
            msg: format!("invalid boolean `{value}`"),
        }),
    }
}

/// Splits on commas that are not inside parentheses, so labels such as
/// `Ideal(A,Q)` survive.
pub fn split_list(value: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in value.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(value[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(value[start..].trim());
    out.retain(|s| !s.is_empty());
    out
}

fn set_once<T>(slot: &mut Option<T>, v: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(BenchError::Parse {
            line,
            msg: format!("duplicate key `{key}`"),
        });
    }
    *slot = Some(v);
    Ok(())
}

impl Raw {
    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "case" => {
                let c = value.parse().map_err(|_| BenchError::Parse {
                    line,
                    msg: format!("unknown case `{value}`"),
                })?;
                set_once(&mut self.case, c, key, line)
            }
            "k_prime" => set_once(&mut self.k_prime, parse_value(value, line, "integer")?, key, line),
            "levels" => {
                let levels = split_list(value)
                    .into_iter()
                    .map(|s| parse_value(s, line, "level"))
                    .collect::<Result<Vec<usize>>>()?;
                set_once(&mut self.levels, levels, key, line)
            }
            "nu" => set_once(&mut self.nu, parse_value(value, line, "number")?, key, line),
            "c_pen" => set_once(&mut self.c_pen, parse_value(value, line, "number")?, key, line),
            "strategies" => {
                let list = split_list(value)
                    .into_iter()
                    .map(|s| {
                        Strategy::from_name(s).map_err(|_| BenchError::Parse {
                            line,
                            msg: format!("unknown strategy `{s}`"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                set_once(&mut self.strategies, list, key, line)
            }
            "outer_tol" => set_once(&mut self.outer_tol, parse_value(value, line, "number")?, key, line),
            "inner_tol" => set_once(&mut self.inner_tol, parse_value(value, line, "number")?, key, line),
            "max_iter" => set_once(&mut self.max_iter, parse_value(value, line, "integer")?, key, line),
            "stop_norm" => {
                let norm = match value.to_ascii_lowercase().as_str() {
                    "preconditioned" => ResidualNorm::Preconditioned,
                    "euclidean" => ResidualNorm::Euclidean,
                    _ => {
                        return Err(BenchError::Parse {
                            line,
                            msg: format!("stop_norm must be `preconditioned` or `euclidean`, got `{value}`"),
                        })
                    }
                };
                set_once(&mut self.stop_norm, norm, key, line)
            }
            "quad_points" => set_once(&mut self.quad_points, parse_value(value, line, "integer")?, key, line),
            "spectra" => set_once(&mut self.spectra, parse_bool(value, line)?, key, line),
            "infsup" => set_once(&mut self.infsup, parse_bool(value, line)?, key, line),
            "divcheck" => set_once(&mut self.divcheck, parse_bool(value, line)?, key, line),
            _ => Err(BenchError::Parse {
                line,
                msg: format!("unknown key `{key}`"),
            }),
        }
    }

    fn finish(self) -> Result<CaseConfig> {
        let case = self.case.ok_or_else(|| BenchError::Config("missing key `case`".into()))?;
        let k_prime = self.k_prime.unwrap_or(2);
        let levels = self.levels.ok_or_else(|| BenchError::Config("missing key `levels`".into()))?;
        let strategies = self.strategies.unwrap_or_default();
        let mut cfg = CaseConfig::new(case, k_prime, levels, strategies);
        cfg.nu = self.nu.unwrap_or(cfg.nu);
        cfg.c_pen = self.c_pen.unwrap_or(cfg.c_pen);
        cfg.outer_tol = self.outer_tol.unwrap_or(cfg.outer_tol);
        cfg.inner_tol = self.inner_tol.unwrap_or(cfg.inner_tol);
        cfg.max_iter = self.max_iter.unwrap_or(cfg.max_iter);
        cfg.stop_norm = self.stop_norm.unwrap_or(cfg.stop_norm);
        cfg.quad_points = self.quad_points;
        cfg.spectra = self.spectra.unwrap_or(false);
        cfg.infsup = self.infsup.unwrap_or(false);
        cfg.divcheck = self.divcheck.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}
