//! JSON experiment configuration shared by every subcommand.

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::{Map, Value};

use seqadapt::harness::{ThetaFamily, ThetaSource, DEFAULT_REPS};
use seqadapt::priors::{DEFAULT_ETA, DEFAULT_GAMMA, DEFAULT_K_MAX};
use seqadapt::{EstimatorKind, ExperimentConfig, HyperParams, ModelSpec, RngSpec};

use crate::error::{config_err, CliResult};

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_ESTIMATORS: [&str; 3] = ["proposed", "model_selection", "model_averaging"];

/// A number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(v) => vec![*v],
            Self::Many(v) => v.clone(),
        }
    }
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_k_max() -> usize {
    DEFAULT_K_MAX
}
fn default_reps() -> usize {
    DEFAULT_REPS
}

/// Every recognised key. Keys a subcommand does not use are ignored by it;
/// keys not listed here are rejected.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub p: Option<usize>,
    pub eps2: Option<f64>,
    pub theta_family: Option<u32>,
    /// Custom coefficient shape at `B = 1`.
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "B2")]
    pub b2: Option<OneOrMany>,
    pub estimators: Option<Vec<String>>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    pub d_max: Option<usize>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    /// Observation for `estimate` and `posterior`; simulated when absent.
    pub x: Option<Vec<f64>>,
    /// Posterior draws to emit.
    #[serde(default)]
    pub draws: usize,
    /// Regression sample CSV.
    pub data: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub d: Option<usize>,
    pub v: Option<Vec<f64>>,
    /// Treat the truncated-prior tail-mass warning as an error.
    #[serde(default)]
    pub strict_tail_mass: bool,
}

/// Apply `key=value` overrides to a JSON object. Values are parsed as JSON
/// and fall back to plain strings.
pub fn apply_overrides(root: &mut Map<String, Value>, overrides: &[String]) -> CliResult<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{item}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(config_err(format!("override `{item}` has an empty key")));
        }
        let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
        root.insert(key.to_string(), value);
    }
    Ok(())
}

/// Parse config text (may be empty) with overrides applied on top.
pub fn load_config(text: Option<&str>, overrides: &[String]) -> CliResult<FileConfig> {
    let mut root = match text {
        Some(t) => match serde_json::from_str::<Value>(t).map_err(|e| config_err(format!("invalid JSON: {e}")))? {
            Value::Object(m) => m,
            _ => return Err(config_err("top level must be a JSON object")),
        },
        None => Map::new(),
    };
    apply_overrides(&mut root, overrides)?;
    let cfg: FileConfig = serde_json::from_value(Value::Object(root)).map_err(|e| config_err(e.to_string()))?;
    cfg.validate_common()?;
    Ok(cfg)
}

/// Parse a JSON risk-sweep config with defaults filled in.
pub fn parse_config(text: &str) -> CliResult<ExperimentConfig> {
    load_config(Some(text), &[])?.experiment()
}

fn missing(key: &str) -> crate::error::CliError {
    config_err(format!("missing required key `{key}`"))
}

impl FileConfig {
    fn validate_common(&self) -> CliResult<()> {
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(config_err(format!("`beta` must lie in (0, 1/2], got {}", self.beta)));
        }
        if self.reps == 0 {
            return Err(config_err("`reps` must be positive"));
        }
        if self.theta_family.is_some() && self.theta.is_some() {
            return Err(config_err("give at most one of `theta_family` and `theta`"));
        }
        Ok(())
    }

    pub fn model(&self) -> CliResult<ModelSpec> {
        let p = self.p.ok_or_else(|| missing("p"))?;
        let eps2 = self.eps2.ok_or_else(|| missing("eps2"))?;
        Ok(ModelSpec::new(eps2, p)?)
    }

    pub fn hyper_params(&self, d_max: usize) -> CliResult<HyperParams> {
        Ok(HyperParams::new(
            self.eta,
            self.gamma,
            self.k_max,
            self.d_max.unwrap_or(d_max),
        )?)
    }

    pub fn rng(&self) -> RngSpec {
        RngSpec::new(self.seed, self.stream)
    }

    pub fn theta_source(&self) -> CliResult<ThetaSource> {
        match (&self.theta, self.theta_family) {
            (Some(v), _) => Ok(ThetaSource::Custom(v.clone())),
            (None, Some(tag)) => Ok(ThetaSource::Family(ThetaFamily::try_from(tag)?)),
            (None, None) => Err(missing("theta_family")),
        }
    }

    pub fn b2_values(&self) -> CliResult<Vec<f64>> {
        Ok(self.b2.as_ref().ok_or_else(|| missing("B2"))?.values())
    }

    /// The single radius `B²` for commands that use one parameter value.
    pub fn single_b2(&self) -> CliResult<f64> {
        match self.b2_values()?.as_slice() {
            [b2] => Ok(*b2),
            other => Err(config_err(format!(
                "`B2` must be a single value here, got {} values",
                other.len()
            ))),
        }
    }

    /// Estimator list; a bare `model_averaging` takes `beta` from the config.
    pub fn estimator_kinds(&self) -> CliResult<Vec<EstimatorKind>> {
        let names: Vec<String> = match &self.estimators {
            Some(v) => v.clone(),
            None => DEFAULT_ESTIMATORS.iter().map(|s| s.to_string()).collect(),
        };
        if names.is_empty() {
            return Err(config_err("`estimators` is empty"));
        }
        names
            .iter()
            .map(|n| {
                if n.trim() == "model_averaging" {
                    Ok(EstimatorKind::ModelAveraging { beta: self.beta })
                } else {
                    n.parse()
                        .map_err(|e: seqadapt::Error| config_err(format!("estimators: {e}")))
                }
            })
            .collect()
    }

    pub fn experiment(&self) -> CliResult<ExperimentConfig> {
        let model = self.model()?;
        let cfg = ExperimentConfig {
            model,
            hp: self.hyper_params(model.p)?,
            estimators: self.estimator_kinds()?,
            theta: self.theta_source()?,
            b2_values: self.b2_values()?,
            reps: self.reps,
            rng: self.rng(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
