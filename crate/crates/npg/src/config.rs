//! Plain-text `key = value` experiment configuration.

use std::fmt;
use std::path::Path;

use crate::demand::DemandParams;
use crate::error::{Error, Result};
use crate::game::GameConfig;

/// Leader policies the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Lnpg,
    Ucb,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lnpg => "lnpg",
            Algorithm::Ucb => "ucb",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Full experiment description; see `load_config` for file keys and
/// defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub theta0: f64,
    pub theta1: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub horizon: u64,
    pub trials: u64,
    pub base_seed: u64,
    pub price_lo: f64,
    pub price_hi: f64,
    pub grid_n: usize,
    pub ucb_arms: usize,
    pub algorithms: Vec<Algorithm>,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta0: f64::NAN,
            theta1: f64::NAN,
            sigma: 3.2,
            kappa: f64::NAN,
            lambda: 1.0,
            horizon: 10_000,
            trials: 200,
            base_seed: 1,
            price_lo: 0.0,
            price_hi: 50.0,
            grid_n: 512,
            ucb_arms: 50,
            algorithms: vec![Algorithm::Lnpg, Algorithm::Ucb],
            out_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn demand_params(&self) -> Result<DemandParams> {
        DemandParams::new(self.theta0, self.theta1, self.sigma)
    }

    pub fn game_config(&self) -> Result<GameConfig> {
        let config = GameConfig {
            params: self.demand_params()?,
            kappa: self.kappa,
            lambda: self.lambda,
            horizon: self.horizon,
            price_lo: self.price_lo,
            price_hi: self.price_hi,
            grid_n: self.grid_n,
            ucb_arms: self.ucb_arms,
        };
        crate::game::validate_config(&config)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta0.is_nan() || self.theta1.is_nan() || self.kappa.is_nan() {
            return Err(Error::Config(
                "theta0, theta1 and kappa are required".into(),
            ));
        }
        if self.trials < 1 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must not be empty".into()));
        }
        self.game_config().map(|_| ())
    }
}

fn parse_value<T: std::str::FromStr>(line_no: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "config line {line_no}: invalid value '{raw}' for key '{key}'"
        ))
    })
}

/// Parses `key = value` lines with `#` comments. Unknown keys are errors;
/// missing keys take the documented defaults. Required keys: `theta0`,
/// `theta1`, `kappa`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {line_no}: expected 'key = value', got '{raw_line}'"
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "theta0" => config.theta0 = parse_value(line_no, key, value)?,
            "theta1" => config.theta1 = parse_value(line_no, key, value)?,
            "sigma" => config.sigma = parse_value(line_no, key, value)?,
            "kappa" => config.kappa = parse_value(line_no, key, value)?,
            "lambda" => config.lambda = parse_value(line_no, key, value)?,
            "horizon" => config.horizon = parse_value(line_no, key, value)?,
            "trials" => config.trials = parse_value(line_no, key, value)?,
            "base_seed" => config.base_seed = parse_value(line_no, key, value)?,
            "price_lo" => config.price_lo = parse_value(line_no, key, value)?,
            "price_hi" => config.price_hi = parse_value(line_no, key, value)?,
            "grid_n" => config.grid_n = parse_value(line_no, key, value)?,
            "ucb_arms" => config.ucb_arms = parse_value(line_no, key, value)?,
            "out_dir" => config.out_dir = value.to_string(),
            "algorithms" => {
                let mut algorithms = Vec::new();
                for token in value.split(',') {
                    match token.trim() {
                        "lnpg" => algorithms.push(Algorithm::Lnpg),
                        "ucb" => algorithms.push(Algorithm::Ucb),
                        other => {
                            return Err(Error::Config(format!(
                                "config line {line_no}: unknown algorithm '{other}'"
                            )))
                        }
                    }
                }
                config.algorithms = algorithms;
            }
            other => {
                return Err(Error::Config(format!(
                    "config line {line_no}: unknown key '{other}'"
                )))
            }
        }
    }
    config.validate()?;
    Ok(config)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
