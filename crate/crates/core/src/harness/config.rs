//! Flat `key = value` sweep configuration.
//!
//! One assignment per line; `#` starts a comment. Ranges are written
//! `lo,hi,steps` (inclusive, `steps` evenly spaced points) or as a single
//! value; lists are comma separated.
//!
//! | key | meaning | default |
//! |---|---|---|
//! | `mode` | `grid`, `eta-sweep`, `runtime`, `snr` or `noise-grid` | required |
//! | `n` | number of nodes | required except in `runtime` |
//! | `K` | number of clusters | 2 |
//! | `d` | transform dimension | 2 |
//! | `sizes` | cluster sizes, must sum to `n` | equal split |
//! | `alpha`, `beta` | range; `p = α·log n/n`, `q = β·log n/n` | required unless `p`/`q` given |
//! | `p`, `q` | probabilities used instead of `alpha`/`beta` | unset |
//! | `sigma` | Gaussian noise level | 0 |
//! | `eta_values` | targets for `eta-sweep` | required there |
//! | `fixed_axis` | `alpha` or `beta`; the axis held fixed in `eta-sweep` | `alpha` |
//! | `n_values` | node counts for `runtime` | required there |
//! | `d_values` | dimensions for `snr` | required there |
//! | `sigma_values` | noise levels for `noise-grid` | required there |
//! | `trials` | realizations per cell | 20 |
//! | `refine` | `none`, `clusters`, `transforms` or `both` | `none` |
//! | `refine_fraction` | share of nodes revisited by cluster refinement | 0.1 |
//! | `seed` | master seed | 0 |
//! | `workers` | worker threads | 1 |
//! | `tolerance`, `max_iterations` | eigensolver settings | 1e-8, 5000 |
//! | `repetitions` | timed repetitions per size in `runtime` | 5 |
//! | `timings` | fill the `t_*_ms` columns of sweep rows | false |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::metrics::{alpha_for_eta, beta_for_eta, eta, log_scale};
use crate::model::equal_split;
use crate::pipeline::RefineMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Grid,
    EtaSweep,
    Runtime,
    Snr,
    NoiseGrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::EtaSweep => "eta-sweep",
            Self::Runtime => "runtime",
            Self::Snr => "snr",
            Self::NoiseGrid => "noise-grid",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(Self::Grid),
            "eta-sweep" => Ok(Self::EtaSweep),
            "runtime" => Ok(Self::Runtime),
            "snr" => Ok(Self::Snr),
            "noise-grid" => Ok(Self::NoiseGrid),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedAxis {
    Alpha,
    Beta,
}

/// Inclusive range of `steps` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Range {
    pub fn single(v: f64) -> Self {
        Self { lo: v, hi: v, steps: 1 }
    }

    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub mode: Mode,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub sizes: Option<Vec<usize>>,
    pub alpha: Option<Range>,
    pub beta: Option<Range>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub sigma: f64,
    pub eta_values: Vec<f64>,
    pub fixed_axis: FixedAxis,
    pub n_values: Vec<usize>,
    pub d_values: Vec<usize>,
    pub sigma_values: Vec<f64>,
    pub trials: usize,
    pub refine: RefineMode,
    pub refine_fraction: f64,
    pub seed: u64,
    pub workers: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub repetitions: usize,
    pub timings: bool,
}

/// One parameter combination of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub sizes: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub q: f64,
    pub sigma: f64,
    pub eta: Option<f64>,
}

impl SweepSpec {
    /// A spec with every optional key at its default.
    pub fn new(mode: Mode, n: usize) -> Self {
        Self {
            mode,
            n,
            k: 2,
            d: 2,
            sizes: None,
            alpha: None,
            beta: None,
            p: None,
            q: None,
            sigma: 0.0,
            eta_values: Vec::new(),
            fixed_axis: FixedAxis::Alpha,
            n_values: Vec::new(),
            d_values: Vec::new(),
            sigma_values: Vec::new(),
            trials: 20,
            refine: RefineMode::None,
            refine_fraction: crate::recovery::DEFAULT_REFINE_FRACTION,
            seed: 0,
            workers: 1,
            tolerance: 1e-8,
            max_iterations: 5000,
            repetitions: 5,
            timings: false,
        }
    }

    /// Expands the spec into its cells, in output order.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        let first = |r: &Option<Range>| r.map(|r| r.lo);
        let mut cells = Vec::new();
        match self.mode {
            Mode::Grid => {
                for a in self.axis_values(self.alpha, self.p)? {
                    for b in self.axis_values(self.beta, self.q)? {
                        cells.push(self.cell(self.n, self.d, a, b, self.sigma)?);
                    }
                }
            }
            Mode::NoiseGrid => {
                for &s in &self.sigma_values {
                    for a in self.axis_values(self.alpha, self.p)? {
                        for b in self.axis_values(self.beta, self.q)? {
                            cells.push(self.cell(self.n, self.d, a, b, s)?);
                        }
                    }
                }
            }
            Mode::EtaSweep => {
                for &target in &self.eta_values {
                    let (a, b) = match self.fixed_axis {
                        FixedAxis::Alpha => {
                            let a = self.fixed_value(first(&self.alpha), self.p, "alpha")?;
                            (a, beta_for_eta(self.n, self.d, a, target).map_err(validation)?)
                        }
                        FixedAxis::Beta => {
                            let b = self.fixed_value(first(&self.beta), self.q, "beta")?;
                            (alpha_for_eta(self.n, self.d, b, target).map_err(validation)?, b)
                        }
                    };
                    cells.push(self.cell(self.n, self.d, a, b, self.sigma)?);
                }
            }
            Mode::Snr => {
                let a = self.fixed_value(first(&self.alpha), self.p, "alpha")?;
                let b = self.fixed_value(first(&self.beta), self.q, "beta")?;
                for &d in &self.d_values {
                    cells.push(self.cell(self.n, d, a, b, self.sigma)?);
                }
            }
            Mode::Runtime => {
                let a = first(&self.alpha).ok_or_else(|| missing("alpha"))?;
                let b = first(&self.beta).ok_or_else(|| missing("beta"))?;
                for &n in &self.n_values {
                    cells.push(self.cell(n, self.d, a, b, self.sigma)?);
                }
            }
        }
        Ok(cells)
    }

    /// `alpha`/`beta` values, or the single value implied by `p`/`q`.
    fn axis_values(&self, range: Option<Range>, prob: Option<f64>) -> Result<Vec<f64>, ConfigError> {
        match (range, prob) {
            (Some(r), None) => Ok(r.values()),
            (None, Some(p)) => Ok(vec![p / log_scale(self.n)]),
            (None, None) => Err(missing("alpha/beta or p/q")),
            (Some(_), Some(_)) => Err(ConfigError::Validation(
                "give either alpha/beta or p/q, not both".into(),
            )),
        }
    }

    fn fixed_value(&self, v: Option<f64>, prob: Option<f64>, name: &str) -> Result<f64, ConfigError> {
        match (v, prob) {
            (Some(v), None) => Ok(v),
            (None, Some(p)) => Ok(p / log_scale(self.n)),
            _ => Err(missing(name)),
        }
    }

    fn cell(&self, n: usize, d: usize, alpha: f64, beta: f64, sigma: f64) -> Result<Cell, ConfigError> {
        let s = log_scale(n);
        // probabilities given directly are used verbatim, not round-tripped
        let p = self.p.unwrap_or(alpha * s);
        let q = self.q.unwrap_or(beta * s);
        for (name, v) in [("p", p), ("q", q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Validation(format!(
                    "{name} = {v} outside [0, 1] at n = {n}, alpha = {alpha}, beta = {beta}"
                )));
            }
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(ConfigError::Validation(format!("sigma = {sigma} must be >= 0")));
        }
        let sizes = match (&self.sizes, self.mode) {
            (Some(s), Mode::Grid | Mode::NoiseGrid | Mode::EtaSweep | Mode::Snr) => s.clone(),
            _ => equal_split(n, self.k),
        };
        Ok(Cell {
            n,
            k: self.k,
            d,
            sizes,
            alpha,
            beta,
            p,
            q,
            sigma,
            eta: eta(n, p, q, d).ok(),
        })
    }

    /// Checks every invariant, including that each cell is well defined.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Validation(m));
        if self.k == 0 {
            return fail("K must be at least 1".into());
        }
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if self.mode != Mode::Runtime && self.n < self.k.max(2) {
            return fail(format!("n = {} must be at least max(K, 2) = {}", self.n, self.k.max(2)));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.refine_fraction) {
            return fail(format!("refine_fraction = {} outside [0, 1]", self.refine_fraction));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iterations == 0 {
            return fail("tolerance and max_iterations must be positive".into());
        }
        if let Some(s) = &self.sizes {
            if s.len() != self.k || s.iter().sum::<usize>() != self.n || s.contains(&0) {
                return fail(format!(
                    "sizes {s:?} must be {} positive counts summing to n = {}",
                    self.k, self.n
                ));
            }
        }
        for r in [self.alpha, self.beta].into_iter().flatten() {
            if r.steps == 0 || !r.lo.is_finite() || !r.hi.is_finite() {
                return fail(format!("bad range {},{},{}", r.lo, r.hi, r.steps));
            }
        }
        let required = |empty: bool, key: &str| {
            if empty {
                Err(missing(key))
            } else {
                Ok(())
            }
        };
        match self.mode {
            Mode::EtaSweep => required(self.eta_values.is_empty(), "eta_values")?,
            Mode::Runtime => {
                required(self.n_values.is_empty(), "n_values")?;
                if self.p.is_some() || self.q.is_some() {
                    return fail("runtime mode scales with n; use alpha/beta, not p/q".into());
                }
                if let Some(&n) = self.n_values.iter().find(|&&n| n < self.k.max(2)) {
                    return fail(format!("n_values entry {n} is smaller than max(K, 2)"));
                }
            }
            Mode::Snr => {
                required(self.d_values.is_empty(), "d_values")?;
                if self.k != 2 {
                    return fail(format!("snr mode needs K = 2, got K = {}", self.k));
                }
                if self.d_values.contains(&0) {
                    return fail("d_values entries must be positive".into());
                }
            }
            Mode::NoiseGrid => required(self.sigma_values.is_empty(), "sigma_values")?,
            Mode::Grid => {}
        }
        self.cells().map(|_| ())
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::Validation(format!("missing required key `{key}`"))
}

fn validation(e: impl fmt::Display) -> ConfigError {
    ConfigError::Validation(e.to_string())
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", s.trim())))
        .collect()
}

fn parse_range(v: &str) -> Result<Range, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
    match parts.as_slice() {
        [x] => Ok(Range::single(num(x)?)),
        [lo, hi, steps] => Ok(Range::new(
            num(lo)?,
            num(hi)?,
            steps.parse().map_err(|e| format!("`{steps}`: {e}"))?,
        )),
        _ => Err(format!("expected `value` or `lo,hi,steps`, got `{v}`")),
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
}

/// Parses configuration text. Later assignments of a key replace earlier ones.
pub fn parse_config(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: "empty key or value".into(),
            });
        }
        entries.insert(key.to_string(), (line, value.to_string()));
    }

    let (mode_line, mode) = entries.remove("mode").ok_or_else(|| missing("mode"))?;
    let mode: Mode = mode.parse().map_err(|message| ConfigError::Parse {
        line: mode_line,
        message,
    })?;
    let n = match entries.remove("n") {
        Some((line, v)) => scalar(&v).map_err(|message| ConfigError::Parse { line, message })?,
        None if mode == Mode::Runtime => 0,
        None => return Err(missing("n")),
    };
    let mut spec = SweepSpec::new(mode, n);
    for (key, (line, v)) in entries {
        let err = |message: String| ConfigError::Parse { line, message };
        match key.as_str() {
            "K" | "k" => spec.k = scalar(&v).map_err(err)?,
            "d" => spec.d = scalar(&v).map_err(err)?,
            "sizes" => spec.sizes = Some(parse_list(&v).map_err(err)?),
            "alpha" => spec.alpha = Some(parse_range(&v).map_err(err)?),
            "beta" => spec.beta = Some(parse_range(&v).map_err(err)?),
            "p" => spec.p = Some(scalar(&v).map_err(err)?),
            "q" => spec.q = Some(scalar(&v).map_err(err)?),
            "sigma" => spec.sigma = scalar(&v).map_err(err)?,
            "eta_values" => spec.eta_values = parse_list(&v).map_err(err)?,
            "fixed_axis" => {
                spec.fixed_axis = match v.as_str() {
                    "alpha" => FixedAxis::Alpha,
                    "beta" => FixedAxis::Beta,
                    _ => return Err(err(format!("fixed_axis must be alpha or beta, got `{v}`"))),
                }
            }
            "n_values" => spec.n_values = parse_list(&v).map_err(err)?,
            "d_values" => spec.d_values = parse_list(&v).map_err(err)?,
            "sigma_values" => spec.sigma_values = parse_list(&v).map_err(err)?,
            "trials" => spec.trials = scalar(&v).map_err(err)?,
            "refine" => spec.refine = v.parse().map_err(err)?,
            "refine_fraction" => spec.refine_fraction = scalar(&v).map_err(err)?,
            "seed" => spec.seed = scalar(&v).map_err(err)?,
            "workers" => spec.workers = scalar(&v).map_err(err)?,
            "tolerance" => spec.tolerance = scalar(&v).map_err(err)?,
            "max_iterations" => spec.max_iterations = scalar(&v).map_err(err)?,
            "repetitions" => spec.repetitions = scalar(&v).map_err(err)?,
            "timings" => spec.timings = parse_bool(&v).map_err(err)?,
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    Ok(spec)
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub refine: Option<RefineMode>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut SweepSpec) {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(t) = self.trials {
            spec.trials = t;
        }
        if let Some(r) = self.refine {
            spec.refine = r;
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
    }
}

/// Reads, overrides and validates a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut spec = parse_config(&text)?;
    overrides.apply(&mut spec);
    spec.validate()?;
    Ok(spec)
}
