//! `key = value` experiment configuration with dotted section names.
//!
//! ```text
//! # comment
//! grid.L = 2400
//! grid.N = 32768
//! data.shape = gaussian
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use scatterlab::solver::{domain_sizing, initial_state, DataShape, InitialData, PairState};
use scatterlab::spectral::{fourier_forward, norm_linf};
use scatterlab::{AnalysisParams, Grid1D};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("config key '{key}': {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub const KEYS: &[&str] = &[
    "grid.L",
    "grid.N",
    "solver.dt",
    "solver.t_end",
    "schedule.ratio",
    "schedule.t0",
    "data.shape",
    "data.epsilon",
    "data.width",
    "data.carrier",
    "data.v_shape",
    "data.v_epsilon",
    "data.v_width",
    "data.v_carrier",
    "analysis.alpha",
    "analysis.delta",
    "analysis.beta",
    "analysis.n",
    "io.outdir",
    "io.save_snapshots",
    "run.seed",
];

/// Relative size of `(1+|ξ|)^{2n+1}|û₁|` at the spectral edge above which
/// the data is considered under-resolved for weight order `n`.
pub const SMOOTHNESS_TAIL_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub length: f64,
    pub points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub ratio: f64,
    pub t0: f64,
    pub u_data: InitialData,
    pub v_data: InitialData,
    pub params: AnalysisParams,
    pub outdir: PathBuf,
    pub save_snapshots: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let data = InitialData::gaussian(0.1, 4.0);
        ExperimentConfig {
            length: 2400.0,
            points: 1 << 15,
            dt: 0.02,
            t_end: 256.0,
            ratio: 2f64.powf(0.25),
            t0: 1.0,
            u_data: data,
            v_data: data,
            params: AnalysisParams::default(),
            outdir: PathBuf::from("out"),
            save_snapshots: false,
            seed: 0,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| ConfigError::new(key, format!("cannot parse '{raw}': {e}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, ConfigError> {
    match raw {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::new(
            key,
            format!("expected true or false, got '{raw}'"),
        )),
    }
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::new(
            key,
            format!("must be positive, got {value}"),
        ))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let (mut alpha, mut delta, mut beta, mut n) = (
            cfg.params.alpha(),
            cfg.params.delta(),
            cfg.params.beta(),
            cfg.params.n(),
        );
        let mut u = cfg.u_data;
        let mut v_shape = None;
        let mut v_epsilon = None;
        let mut v_width = None;
        let mut v_carrier = None;
        let mut seen: Vec<String> = Vec::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, raw) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(line, format!("line {} is not 'key = value'", lineno + 1))
            })?;
            let (key, raw) = (key.trim(), raw.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::new(key, "unknown key"));
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::new(key, "given more than once"));
            }
            seen.push(key.to_string());
            match key {
                "grid.L" => cfg.length = positive(key, parse_value(key, raw)?)?,
                "grid.N" => cfg.points = parse_value(key, raw)?,
                "solver.dt" => cfg.dt = positive(key, parse_value(key, raw)?)?,
                "solver.t_end" => cfg.t_end = parse_value(key, raw)?,
                "schedule.ratio" => cfg.ratio = parse_value(key, raw)?,
                "schedule.t0" => cfg.t0 = parse_value(key, raw)?,
                "data.shape" => u.shape = parse_value(key, raw)?,
                "data.epsilon" => u.epsilon = parse_value(key, raw)?,
                "data.width" => u.width = positive(key, parse_value(key, raw)?)?,
                "data.carrier" => u.carrier = parse_value(key, raw)?,
                "data.v_shape" => v_shape = Some(parse_value::<DataShape>(key, raw)?),
                "data.v_epsilon" => v_epsilon = Some(parse_value(key, raw)?),
                "data.v_width" => v_width = Some(positive(key, parse_value(key, raw)?)?),
                "data.v_carrier" => v_carrier = Some(parse_value(key, raw)?),
                "analysis.alpha" => alpha = parse_value(key, raw)?,
                "analysis.delta" => delta = parse_value(key, raw)?,
                "analysis.beta" => beta = parse_value(key, raw)?,
                "analysis.n" => n = parse_value(key, raw)?,
                "io.outdir" => cfg.outdir = PathBuf::from(raw),
                "io.save_snapshots" => cfg.save_snapshots = parse_bool(key, raw)?,
                "run.seed" => cfg.seed = parse_value(key, raw)?,
                _ => unreachable!("key list checked above"),
            }
        }

        for (key, value) in [
            ("data.epsilon", u.epsilon),
            ("data.v_epsilon", v_epsilon.unwrap_or(0.0)),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ConfigError::new(
                    key,
                    format!("must be nonnegative, got {value}"),
                ));
            }
        }
        cfg.u_data = u;
        cfg.v_data = InitialData {
            shape: v_shape.unwrap_or(u.shape),
            epsilon: v_epsilon.unwrap_or(u.epsilon),
            width: v_width.unwrap_or(u.width),
            carrier: v_carrier.unwrap_or(u.carrier),
        };
        cfg.params = AnalysisParams::new(alpha, delta, beta, n, u.epsilon.max(cfg.v_data.epsilon))
            .map_err(|e| {
                let key = if !(alpha > 0.0 && 4.0 * alpha < delta) {
                    "analysis.alpha"
                } else if !(delta < 0.25) {
                    "analysis.delta"
                } else {
                    "analysis.beta"
                };
                ConfigError::new(key, e.to_string())
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.length, self.points).expect("validated")
    }

    pub fn initial_state(&self) -> PairState {
        initial_state(&self.grid(), &self.u_data, &self.v_data)
    }

    /// Snapshot times: the geometric schedule from `t0`.
    pub fn schedule(&self) -> Vec<f64> {
        scatterlab::solver::geometric_schedule(self.t0, self.ratio, self.t_end).expect("validated")
    }

    /// Checks the grid, the schedule, the domain sizing rule and that the
    /// data is resolved well enough for weight order `n`.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let grid = Grid1D::new(self.length, self.points)
            .map_err(|e| ConfigError::new("grid.N", e.to_string()))?;
        if !(self.t_end > 1.0 && self.t_end.is_finite()) {
            return Err(ConfigError::new(
                "solver.t_end",
                format!("must exceed 1, got {}", self.t_end),
            ));
        }
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            return Err(ConfigError::new(
                "schedule.ratio",
                format!("must exceed 1, got {}", self.ratio),
            ));
        }
        if !(self.t0 >= 1.0 && self.t0 <= self.t_end) {
            return Err(ConfigError::new(
                "schedule.t0",
                format!("must lie in [1, t_end], got {}", self.t0),
            ));
        }
        let state = initial_state(&grid, &self.u_data, &self.v_data);
        let sizing = domain_sizing(&state.u, &state.v, self.t_end)
            .map_err(|e| ConfigError::new("grid.L", e.to_string()))?;
        if sizing.required_length > self.length {
            return Err(ConfigError::new(
                "grid.L",
                format!(
                    "t_end = {} needs L >= {:.1} (4·ξ_max·t_end + data extent)",
                    self.t_end, sizing.required_length
                ),
            ));
        }
        let order = 2 * self.params.n() as i32 + 1;
        for field in [&state.u, &state.v] {
            let spec = fourier_forward(field).expect("physical side");
            let peak = norm_linf(&spec);
            if peak == 0.0 {
                continue;
            }
            let band = (grid.len() / 100).max(1);
            let xi = grid.freqs();
            let tail = spec
                .samples()
                .iter()
                .zip(&xi)
                .enumerate()
                .filter(|(i, _)| *i < band || *i >= grid.len() - band)
                .map(|(_, (z, x))| z.norm() * (1.0 + x.abs()).powi(order))
                .fold(0.0, f64::max);
            if tail > SMOOTHNESS_TAIL_LIMIT * peak {
                return Err(ConfigError::new(
                    "analysis.n",
                    format!("data is not resolved to order 2n+1 = {order} on this grid"),
                ));
            }
        }
        Ok(())
    }
}
