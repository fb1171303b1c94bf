//! Run configuration: built-in defaults, then an optional `key = value` file,
//! then command-line flags.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gzk_core::instability::{GrowthScale, KGrid, VerdictSettings};
use gzk_core::wave::{Branch, PeriodMap, WaveSolver};

use crate::error::CliError;

/// Every configuration key with its default and help text.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("p", "1", "nonlinearity exponent"),
    ("c", "1", "wave speed"),
    ("L", "7", "period"),
    ("branch", "positive", "positive or sign-changing"),
    ("N", "256", "seed grid size for the wave solver"),
    ("quad_tol", "1e-13", "relative tolerance of the period quadrature"),
    ("newton_tol", "1e-12", "Newton step tolerance"),
    ("residual_tol", "1e-10", "accepted ODE residual"),
    ("tail_tol", "1e-12", "accepted Fourier tail ratio"),
    ("zero_tol", "1e-8", "eigenvalues below zero_tol * max|eig| count as zero in spectrum files"),
    ("growth_rel", "1e-4", "growth above growth_rel * scale counts as instability"),
    ("growth_scale", "spectral", "spectral (max |eig QL|) or cutoff (k0^2)"),
    ("k_below", "40", "log-spaced k samples on [k0/100, k0)"),
    ("k_approach", "2,3,4", "extra samples k0 (1 - 10^-j)"),
    ("k_above", "10", "linear k samples on (k0, 2 k0]"),
    ("mass_step", "1e-3", "relative speed step for d/dc of the mass, or none"),
    ("k", "auto", "transverse wavenumber for spectrum and evolve"),
    ("operator", "transverse", "l, ql, r, p or transverse"),
    ("p_values", "none", "comma-separated exponents for sweep"),
    ("c_range", "none", "lo:hi:steps speeds for sweep"),
    ("L_range", "none", "lo:hi:steps periods for sweep"),
    ("workers", "0", "sweep threads, 0 for all cores"),
    ("horizon", "auto", "evolution time horizon"),
    ("dt", "auto", "evolution time step"),
    ("init", "smooth", "evolution initial data: smooth or mode"),
    ("wave_file", "none", "load the wave from a JSON file instead of solving"),
    ("out", "out", "output directory"),
    ("formats", "json,csv,svg", "subset of json, csv, svg"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    L,
    Ql,
    R,
    P,
    Transverse,
}

impl Operator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Operator::L => "l",
            Operator::Ql => "ql",
            Operator::R => "r",
            Operator::P => "p",
            Operator::Transverse => "transverse",
        }
    }

    /// Whether the operator depends on `k`.
    pub fn transverse(&self) -> bool {
        matches!(self, Operator::R | Operator::P | Operator::Transverse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Smooth,
    Mode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        (0..self.steps).map(|i| self.lo + span * i as f64 / (self.steps - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub p: f64,
    pub c: f64,
    pub period: f64,
    pub branch: Branch,
    pub n: usize,
    pub quad_tol: f64,
    pub newton_tol: f64,
    pub residual_tol: f64,
    pub tail_tol: f64,
    pub zero_tol: f64,
    pub growth_rel: f64,
    pub growth_scale: GrowthScale,
    pub k_grid: KGrid,
    pub mass_step: Option<f64>,
    pub k: Option<f64>,
    pub operator: Operator,
    pub p_values: Option<Vec<f64>>,
    pub c_range: Option<Range>,
    pub l_range: Option<Range>,
    pub workers: usize,
    pub horizon: Option<f64>,
    pub dt: Option<f64>,
    pub init: Init,
    pub wave_file: Option<PathBuf>,
    pub out: PathBuf,
    pub formats: BTreeSet<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            p: 0.0,
            c: 0.0,
            period: 0.0,
            branch: Branch::Positive,
            n: 0,
            quad_tol: 0.0,
            newton_tol: 0.0,
            residual_tol: 0.0,
            tail_tol: 0.0,
            zero_tol: 0.0,
            growth_rel: 0.0,
            growth_scale: GrowthScale::Spectral,
            k_grid: KGrid::default(),
            mass_step: None,
            k: None,
            operator: Operator::Transverse,
            p_values: None,
            c_range: None,
            l_range: None,
            workers: 0,
            horizon: None,
            dt: None,
            init: Init::Smooth,
            wave_file: None,
            out: PathBuf::new(),
            formats: BTreeSet::new(),
        };
        for (key, value, _) in KEYS {
            cfg.set(key, value).expect("built-in defaults parse");
        }
        cfg
    }
}

fn usage(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("{key} = {value}: {what}"))
}

fn number(key: &str, value: &str) -> Result<f64, CliError> {
    match value.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(usage(key, value, "expected a finite number")),
    }
}

fn positive(key: &str, value: &str) -> Result<f64, CliError> {
    let x = number(key, value)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(usage(key, value, "must be positive"))
    }
}

fn count(key: &str, value: &str) -> Result<usize, CliError> {
    value.trim().parse().map_err(|_| usage(key, value, "expected a non-negative integer"))
}

fn optional<T>(
    key: &str,
    value: &str,
    sentinel: &str,
    parse: impl Fn(&str, &str) -> Result<T, CliError>,
) -> Result<Option<T>, CliError> {
    if value.trim() == sentinel {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn range(key: &str, value: &str) -> Result<Range, CliError> {
    let parts: Vec<&str> = value.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(usage(key, value, "expected lo:hi:steps"));
    };
    let r = Range { lo: positive(key, lo)?, hi: positive(key, hi)?, steps: count(key, steps)? };
    if r.lo >= r.hi || r.steps < 2 {
        return Err(usage(key, value, "needs lo < hi and at least 2 steps"));
    }
    Ok(r)
}

fn list<T>(key: &str, value: &str, parse: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(key, s)).collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "p" => self.p = positive(key, v)?,
            "c" => self.c = positive(key, v)?,
            "L" => self.period = positive(key, v)?,
            "branch" => self.branch = v.parse().map_err(|_| usage(key, v, "expected positive or sign-changing"))?,
            "N" => {
                self.n = count(key, v)?;
                if self.n < 8 || !self.n.is_multiple_of(2) {
                    return Err(usage(key, v, "needs an even grid of at least 8 points"));
                }
            }
            "quad_tol" => self.quad_tol = positive(key, v)?,
            "newton_tol" => self.newton_tol = positive(key, v)?,
            "residual_tol" => self.residual_tol = positive(key, v)?,
            "tail_tol" => self.tail_tol = positive(key, v)?,
            "zero_tol" => self.zero_tol = positive(key, v)?,
            "growth_rel" => self.growth_rel = positive(key, v)?,
            "growth_scale" => {
                self.growth_scale = match v {
                    "spectral" => GrowthScale::Spectral,
                    "cutoff" => GrowthScale::Cutoff,
                    _ => return Err(usage(key, v, "expected spectral or cutoff")),
                }
            }
            "k_below" => self.k_grid.below = count(key, v)?,
            "k_approach" => {
                self.k_grid.approach = list(key, v, |k, s| {
                    s.trim()
                        .parse::<i32>()
                        .ok()
                        .filter(|&j| j > 0)
                        .ok_or_else(|| usage(k, s, "expected positive integers"))
                })?
            }
            "k_above" => self.k_grid.above = count(key, v)?,
            "mass_step" => self.mass_step = optional(key, v, "none", positive)?,
            "k" => {
                self.k = optional(key, v, "auto", number)?;
                if self.k.is_some_and(|k| k < 0.0) {
                    return Err(usage(key, v, "must be non-negative"));
                }
            }
            "operator" => {
                self.operator = match v {
                    "l" => Operator::L,
                    "ql" => Operator::Ql,
                    "r" => Operator::R,
                    "p" => Operator::P,
                    "transverse" => Operator::Transverse,
                    _ => return Err(usage(key, v, "expected l, ql, r, p or transverse")),
                }
            }
            "p_values" => self.p_values = optional(key, v, "none", |k, s| list(k, s, positive))?,
            "c_range" => self.c_range = optional(key, v, "none", range)?,
            "L_range" => self.l_range = optional(key, v, "none", range)?,
            "workers" => self.workers = count(key, v)?,
            "horizon" => self.horizon = optional(key, v, "auto", positive)?,
            "dt" => self.dt = optional(key, v, "auto", positive)?,
            "init" => {
                self.init = match v {
                    "smooth" => Init::Smooth,
                    "mode" => Init::Mode,
                    _ => return Err(usage(key, v, "expected smooth or mode")),
                }
            }
            "wave_file" => self.wave_file = optional(key, v, "none", |_, s| Ok(PathBuf::from(s)))?,
            "out" => {
                if v.is_empty() {
                    return Err(usage(key, v, "must not be empty"));
                }
                self.out = PathBuf::from(v);
            }
            "formats" => {
                self.formats = list(key, v, |k, s| match s.trim() {
                    "json" => Ok(Format::Json),
                    "csv" => Ok(Format::Csv),
                    "svg" => Ok(Format::Svg),
                    _ => Err(usage(k, s, "expected json, csv or svg")),
                })?
                .into_iter()
                .collect()
            }
            _ => return Err(CliError::Usage(format!("unknown key {key}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)));
            };
            self.set(key.trim(), value).map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn solver(&self) -> WaveSolver<f64> {
        WaveSolver {
            n_initial: self.n,
            residual_tol: self.residual_tol,
            newton_tol: self.newton_tol,
            tail_tol: self.tail_tol,
            period_map: PeriodMap::new(self.quad_tol),
            ..WaveSolver::default()
        }
    }

    pub fn verdict_settings(&self) -> VerdictSettings<f64> {
        VerdictSettings {
            k_grid: self.k_grid.clone(),
            growth_rel: self.growth_rel,
            growth_scale: self.growth_scale,
            mass_step: self.mass_step,
            solver: self.solver(),
        }
    }
}

/// The defaults as a config file.
pub fn defaults_text() -> String {
    let mut s = String::new();
    for (key, value, help) in KEYS {
        s.push_str(&format!("# {help}\n{key} = {value}\n"));
    }
    s
}
