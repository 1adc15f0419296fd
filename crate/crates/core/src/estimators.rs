//! Estimator catalog.
//!
//! Every estimator acts coordinate-wise as `θ̂_i = c_i(x) x_i` with a
//! data-dependent factor `c_i ∈ [0, 1]`, so all of them are odd and map
//! zero to zero.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::normalize_log_weights;
use crate::model::{CoefVector, ModelSpec};
use crate::posterior::SievePosterior;
use crate::priors::{gaussian_prior_variance, scale_mixture_component_variance, HyperParams, ScaleMixtureSpec};

/// `r̂_d = -Σ_{i≤d} x_i² + 2ε²d`, an unbiased estimate (up to a
/// `θ`-only constant) of the risk of truncating at `d`.
pub fn rhat(x: &[f64], d: usize, eps2: f64) -> Result<f64> {
    if d == 0 || d > x.len() {
        return Err(invalid("d", format!("must lie in 1..={}", x.len())));
    }
    Ok(-x[..d].iter().map(|v| v * v).sum::<f64>() + 2.0 * eps2 * d as f64)
}

/// `r̂_1, …, r̂_p` via a running sum.
pub fn rhat_all(x: &[f64], eps2: f64) -> Vec<f64> {
    let mut acc = 0.0;
    x.iter()
        .enumerate()
        .map(|(j, v)| {
            acc += v * v;
            -acc + 2.0 * eps2 * (j + 1) as f64
        })
        .collect()
}

/// Smallest minimizer of `r̂_d` over `1..=p`.
pub fn select_dimension(x: &[f64], eps2: f64) -> usize {
    let r = rhat_all(x, eps2);
    let mut best = 0;
    for (j, v) in r.iter().enumerate() {
        if *v < r[best] {
            best = j;
        }
    }
    best + 1
}

pub fn estimate_model_selection(x: &[f64], model: &ModelSpec) -> Result<CoefVector> {
    model.check_len(x)?;
    Ok(estimate_truncation_unchecked(x, select_dimension(x, model.eps2)))
}

/// Normalized log-weights `log w_d`, `w_d ∝ exp(-β r̂_d / (2ε²))`, `d = 1..=p`.
pub fn model_averaging_log_weights(x: &[f64], beta: f64, eps2: f64) -> Vec<f64> {
    let mut lw: Vec<f64> = rhat_all(x, eps2).iter().map(|r| -beta * r / (2.0 * eps2)).collect();
    normalize_log_weights(&mut lw);
    lw
}

pub fn estimate_model_averaging(x: &[f64], beta: f64, model: &ModelSpec) -> Result<CoefVector> {
    model.check_len(x)?;
    check_beta(beta)?;
    let lw = model_averaging_log_weights(x, beta, model.eps2);
    // tail[i] = Σ_{d ≥ i} w_d
    let mut tail = vec![0.0; x.len()];
    let mut acc = 0.0;
    for j in (0..x.len()).rev() {
        acc += lw[j].exp();
        tail[j] = acc.min(1.0);
    }
    Ok(CoefVector::from_raw(x.iter().zip(&tail).map(|(v, t)| v * t).collect()))
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(invalid("beta", format!("must lie in (0, 1/2], got {beta}")));
    }
    Ok(())
}

/// Conjugate posterior mean under `G(·|α) = ⊗ N(0, i^{-2α-1})`.
pub fn estimate_gaussian_prior(x: &[f64], alpha: f64, model: &ModelSpec) -> Result<CoefVector> {
    model.check_len(x)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    Ok(CoefVector::from_raw(
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                let var = gaussian_prior_variance(j + 1, alpha);
                var / (var + model.eps2) * v
            })
            .collect(),
    ))
}

/// First coordinate of the Bayes estimator under a sieve prior whose
/// first coordinate has unit prior variance (`C_M(·|α)` for any `α`, `M`):
/// `x_1 / (1 + ε²)`.
pub fn sieve_first_coordinate(x1: f64, eps2: f64) -> f64 {
    x1 / (1.0 + eps2)
}

/// Weakly geometric blocks covering coordinates `1..=d` (returned as
/// 0-based ranges). Block ends grow like `⌈(1+ρ)^j⌉` with
/// `ρ = 1 / max(log(1/ε²), 1)`, each block holding at least one coordinate.
pub fn weakly_geometric_blocks(d: usize, eps2: f64) -> Vec<Range<usize>> {
    let rho = 1.0 / (1.0 / eps2).ln().max(1.0);
    let growth = 1.0 + rho;
    let mut blocks = Vec::new();
    let mut start = 1usize;
    let mut j = 1i32;
    while start <= d {
        let geometric = growth.powi(j).ceil();
        let end = if geometric.is_finite() && geometric < (d + 1) as f64 {
            (geometric as usize).max(start + 1)
        } else {
            d + 1
        };
        let end = end.min(d + 1);
        blocks.push(start - 1..end - 1);
        start = end;
        j += 1;
    }
    blocks
}

/// Default truncation of the blockwise James–Stein estimator:
/// `min(p, ⌊1/ε²⌋)`.
pub fn james_stein_dimension(model: &ModelSpec) -> usize {
    ((1.0 / model.eps2).floor() as usize).min(model.p)
}

/// Blockwise positive-part James–Stein. Coordinates above `truncation`
/// (default [`james_stein_dimension`]) are set to zero; blocks of size at
/// most two are passed through.
pub fn estimate_block_james_stein(x: &[f64], model: &ModelSpec, truncation: Option<usize>) -> Result<CoefVector> {
    model.check_len(x)?;
    let d = match truncation {
        Some(d) if d == 0 || d > model.p => return Err(invalid("truncation", format!("must lie in 1..={}", model.p))),
        Some(d) => d,
        None => james_stein_dimension(model),
    };
    let mut out = vec![0.0; x.len()];
    for block in weakly_geometric_blocks(d, model.eps2) {
        let len = block.len();
        let xb = &x[block.clone()];
        let factor = if len <= 2 {
            1.0
        } else {
            let norm: f64 = xb.iter().map(|v| v * v).sum();
            if norm > 0.0 {
                (1.0 - (len - 2) as f64 * model.eps2 / norm).max(0.0)
            } else {
                0.0
            }
        };
        for (o, v) in out[block].iter_mut().zip(xb) {
            *o = factor * v;
        }
    }
    Ok(CoefVector::from_raw(out))
}

/// Posterior grid weights `log π(t|x)` for the scale-mixture prior.
pub fn scale_mixture_log_weights(x: &[f64], spec: &ScaleMixtureSpec, eps2: f64) -> Vec<f64> {
    let mut lw: Vec<f64> = spec
        .grid
        .iter()
        .map(|&(t, w)| {
            let mut acc = w.ln();
            for (j, v) in x.iter().enumerate() {
                let var = scale_mixture_component_variance(j + 1, t, spec);
                acc += -0.5 * (var / eps2).ln_1p() + v * v * var / (2.0 * eps2 * (var + eps2));
            }
            acc
        })
        .collect();
    normalize_log_weights(&mut lw);
    lw
}

pub fn estimate_scale_mixture(x: &[f64], spec: &ScaleMixtureSpec, model: &ModelSpec) -> Result<CoefVector> {
    model.check_len(x)?;
    let lw = scale_mixture_log_weights(x, spec, model.eps2);
    let mut factor = vec![0.0; x.len()];
    for (&(t, _), l) in spec.grid.iter().zip(&lw) {
        let w = l.exp();
        for (j, f) in factor.iter_mut().enumerate() {
            let var = scale_mixture_component_variance(j + 1, t, spec);
            *f += w * var / (var + model.eps2);
        }
    }
    Ok(CoefVector::from_raw(
        x.iter().zip(&factor).map(|(v, f)| v * f).collect(),
    ))
}

pub fn estimate_mle(x: &[f64]) -> CoefVector {
    CoefVector::from_raw(x.to_vec())
}

pub fn estimate_truncation(x: &[f64], d: usize) -> Result<CoefVector> {
    if d == 0 || d > x.len() {
        return Err(invalid("d", format!("must lie in 1..={}", x.len())));
    }
    Ok(estimate_truncation_unchecked(x, d))
}

fn estimate_truncation_unchecked(x: &[f64], d: usize) -> CoefVector {
    let mut v = x.to_vec();
    v[d..].iter_mut().for_each(|c| *c = 0.0);
    CoefVector::from_raw(v)
}

/// Bayes estimator under the hierarchical sieve prior.
pub fn estimate_proposed(x: &[f64], hp: &HyperParams, model: &ModelSpec) -> Result<CoefVector> {
    SievePosterior::new(hp, model)?.mean(x)
}

/// Which estimator to apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorKind {
    Proposed,
    ModelSelection,
    ModelAveraging {
        beta: f64,
    },
    /// `truncation: None` uses `min(p, ⌊1/ε²⌋)`.
    BlockJamesStein {
        truncation: Option<usize>,
    },
    GaussianPrior {
        alpha: f64,
    },
    ScaleMixture(ScaleMixtureSpec),
    Mle,
    Truncation {
        d: usize,
    },
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Proposed => write!(f, "proposed"),
            Self::ModelSelection => write!(f, "model_selection"),
            Self::ModelAveraging { beta } => write!(f, "model_averaging:{beta}"),
            Self::BlockJamesStein { truncation: None } => write!(f, "block_james_stein"),
            Self::BlockJamesStein { truncation: Some(d) } => write!(f, "block_james_stein:{d}"),
            Self::GaussianPrior { alpha } => write!(f, "gaussian_prior:{alpha}"),
            Self::ScaleMixture(spec) => write!(f, "scale_mixture:{}", spec.alpha),
            Self::Mle => write!(f, "mle"),
            Self::Truncation { d } => write!(f, "truncation:{d}"),
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    /// Parses `name` or `name:param`, e.g. `model_averaging:0.5`,
    /// `truncation:10`, `scale_mixture` (α = 2, inverse-gamma grid).
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>, default: Option<f64>| -> Result<f64> {
            match a {
                Some(a) => a
                    .parse::<f64>()
                    .map_err(|_| invalid("estimator", format!("bad numeric parameter in `{s}`"))),
                None => default.ok_or_else(|| invalid("estimator", format!("`{name}` needs a parameter"))),
            }
        };
        let int = |a: Option<&str>| -> Result<usize> {
            a.ok_or_else(|| invalid("estimator", format!("`{name}` needs a parameter")))?
                .parse::<usize>()
                .map_err(|_| invalid("estimator", format!("bad integer parameter in `{s}`")))
        };
        let kind = match name {
            "proposed" => Self::Proposed,
            "model_selection" => Self::ModelSelection,
            "model_averaging" => Self::ModelAveraging {
                beta: num(arg, Some(0.5))?,
            },
            "block_james_stein" => Self::BlockJamesStein {
                truncation: arg.map(|_| int(arg)).transpose()?,
            },
            "gaussian_prior" => Self::GaussianPrior { alpha: num(arg, None)? },
            "scale_mixture" => Self::ScaleMixture(ScaleMixtureSpec::inverse_gamma_default(num(arg, Some(2.0))?)?),
            "mle" => Self::Mle,
            "truncation" => Self::Truncation { d: int(arg)? },
            other => return Err(invalid("estimator", format!("unknown estimator `{other}`"))),
        };
        Ok(kind)
    }
}

impl TryFrom<String> for EstimatorKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorKind> for String {
    fn from(k: EstimatorKind) -> Self {
        k.to_string()
    }
}

/// An estimator together with the model context it runs in.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub hp: HyperParams,
    pub model: ModelSpec,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, hp: HyperParams, model: ModelSpec) -> Result<Self> {
        let spec = Self { kind, hp, model };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            EstimatorKind::ModelAveraging { beta } => check_beta(*beta),
            EstimatorKind::Truncation { d } if *d == 0 || *d > self.model.p => {
                Err(invalid("d", format!("truncation must lie in 1..={}", self.model.p)))
            }
            EstimatorKind::BlockJamesStein { truncation: Some(d) } if *d == 0 || *d > self.model.p => {
                Err(invalid("truncation", format!("must lie in 1..={}", self.model.p)))
            }
            EstimatorKind::GaussianPrior { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                Err(invalid("alpha", format!("must be positive, got {alpha}")))
            }
            EstimatorKind::Proposed => self.hp.validate_for(&self.model),
            _ => Ok(()),
        }
    }

    /// Precompute whatever the estimator can reuse across observations.
    pub fn prepare(&self) -> Result<PreparedEstimator> {
        self.validate()?;
        let posterior = match self.kind {
            EstimatorKind::Proposed => Some(SievePosterior::new(&self.hp, &self.model)?),
            _ => None,
        };
        Ok(PreparedEstimator {
            spec: self.clone(),
            posterior,
        })
    }
}

/// An [`EstimatorSpec`] ready to be applied to many observations.
#[derive(Debug, Clone)]
pub struct PreparedEstimator {
    spec: EstimatorSpec,
    posterior: Option<SievePosterior>,
}

impl PreparedEstimator {
    pub fn spec(&self) -> &EstimatorSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        self.spec.kind.to_string()
    }

    pub fn estimate(&self, x: &[f64]) -> Result<CoefVector> {
        let model = &self.spec.model;
        model.check_len(x)?;
        match &self.spec.kind {
            EstimatorKind::Proposed => self.posterior.as_ref().expect("prepared posterior").mean(x),
            EstimatorKind::ModelSelection => estimate_model_selection(x, model),
            EstimatorKind::ModelAveraging { beta } => estimate_model_averaging(x, *beta, model),
            EstimatorKind::BlockJamesStein { truncation } => estimate_block_james_stein(x, model, *truncation),
            EstimatorKind::GaussianPrior { alpha } => estimate_gaussian_prior(x, *alpha, model),
            EstimatorKind::ScaleMixture(spec) => estimate_scale_mixture(x, spec, model),
            EstimatorKind::Mle => Ok(estimate_mle(x)),
            EstimatorKind::Truncation { d } => estimate_truncation(x, *d),
        }
    }
}
