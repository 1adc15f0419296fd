//! Prior families on the coefficient sequence.
//!
//! The hierarchical sieve prior draws a smoothness index `K ~ F`, a
//! dimension `D ~ M`, then `θ_i ~ N(0, ε² D^{2K+1} i^{-(2K+1)})` for `i ≤ D`
//! and `θ_i = 0` beyond. Both `M(d) ∝ e^{-ηd}` and `F(k) ∝ e^{-γk}` are
//! geometric on `{1, 2, …}`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::{normalize_log_weights, sample_log_weights};
use crate::model::{CoefVector, ModelSpec};
use crate::rng::RngSpec;

pub const DEFAULT_ETA: f64 = 2.0;
pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_K_MAX: usize = 50;

/// Hyperparameters of `Π`, with the index sets truncated at `k_max`, `d_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub eta: f64,
    pub gamma: f64,
    pub k_max: usize,
    pub d_max: usize,
}

impl HyperParams {
    pub fn new(eta: f64, gamma: f64, k_max: usize, d_max: usize) -> Result<Self> {
        let hp = Self {
            eta,
            gamma,
            k_max,
            d_max,
        };
        hp.validate()?;
        Ok(hp)
    }

    /// `η = γ = 2`, `k_max = 50`, `d_max = p`.
    pub fn defaults_for(model: &ModelSpec) -> Self {
        Self {
            eta: DEFAULT_ETA,
            gamma: DEFAULT_GAMMA,
            k_max: DEFAULT_K_MAX,
            d_max: model.p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", format!("must be positive, got {}", self.eta)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be positive, got {}", self.gamma)));
        }
        if self.k_max == 0 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        if self.d_max == 0 {
            return Err(invalid("d_max", "must be at least 1"));
        }
        Ok(())
    }

    pub fn validate_for(&self, model: &ModelSpec) -> Result<()> {
        self.validate()?;
        if self.d_max > model.p {
            return Err(invalid(
                "d_max",
                format!("{} exceeds the truncation dimension p = {}", self.d_max, model.p),
            ));
        }
        Ok(())
    }

    /// Untruncated prior mass lost by cutting the index sets at
    /// `(k_max, d_max)`: `e^{-γ k_max} + e^{-η d_max}`.
    pub fn truncated_tail_mass(&self) -> f64 {
        (-self.gamma * self.k_max as f64).exp() + (-self.eta * self.d_max as f64).exp()
    }

    /// Log-masses of `M` restricted to `1..=d_max` and renormalized.
    pub fn log_m_truncated(&self) -> Vec<f64> {
        truncated_geometric(self.eta, self.d_max)
    }

    /// Log-masses of `F` restricted to `1..=k_max` and renormalized.
    pub fn log_f_truncated(&self) -> Vec<f64> {
        truncated_geometric(self.gamma, self.k_max)
    }
}

fn log_geometric(n: usize, rate: f64, name: &'static str) -> Result<f64> {
    if n == 0 {
        return Err(invalid(name, "index starts at 1"));
    }
    // e^{-rate n}(e^{rate} - 1) = e^{-rate (n-1)} (1 - e^{-rate})
    Ok(-rate * (n - 1) as f64 + (-(-rate).exp()).ln_1p())
}

fn truncated_geometric(rate: f64, max: usize) -> Vec<f64> {
    let mut lw: Vec<f64> = (1..=max).map(|n| -rate * n as f64).collect();
    normalize_log_weights(&mut lw);
    lw
}

/// `log M(d)` for `M(d) ∝ e^{-ηd}` normalized over all of `ℕ`.
pub fn log_m(d: usize, eta: f64) -> Result<f64> {
    log_geometric(d, eta, "d")
}

/// `log F(k)` for `F(k) ∝ e^{-γk}` normalized over all of `ℕ`.
pub fn log_f(k: usize, gamma: f64) -> Result<f64> {
    log_geometric(k, gamma, "k")
}

/// Variance of `θ_i` under `S(·|d, α = k)`: `ε² d^{2k+1} i^{-(2k+1)}` for
/// `i ≤ d`, zero otherwise.
pub fn prior_component_variance(i: usize, d: usize, k: usize, eps2: f64) -> f64 {
    if i == 0 || i > d {
        return 0.0;
    }
    let expo = (2 * k + 1) as f64;
    eps2 * (expo * ((d as f64).ln() - (i as f64).ln())).exp()
}

/// One draw from `Π` together with its latent indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDraw {
    pub k: usize,
    pub d: usize,
    pub theta: CoefVector,
}

pub fn sample_prior_pi(hp: &HyperParams, model: &ModelSpec, rng: &RngSpec) -> Result<PriorDraw> {
    hp.validate_for(model)?;
    Ok(sample_prior_pi_with(
        hp,
        model,
        &hp.log_f_truncated(),
        &hp.log_m_truncated(),
        &mut rng.rng(),
    ))
}

pub(crate) fn sample_prior_pi_with<R: Rng + ?Sized>(
    hp: &HyperParams,
    model: &ModelSpec,
    log_f: &[f64],
    log_m: &[f64],
    rng: &mut R,
) -> PriorDraw {
    debug_assert_eq!(log_f.len(), hp.k_max);
    let k = sample_log_weights(log_f, rng.random::<f64>()) + 1;
    let d = sample_log_weights(log_m, rng.random::<f64>()) + 1;
    let mut theta = vec![0.0; model.p];
    for (j, slot) in theta.iter_mut().enumerate().take(d) {
        let sd = prior_component_variance(j + 1, d, k, model.eps2).sqrt();
        let z: f64 = rng.sample(StandardNormal);
        *slot = sd * z;
    }
    PriorDraw {
        k,
        d,
        theta: CoefVector::from_raw(theta),
    }
}

/// Variance `i^{-2α-1}` of coordinate `i` under `G(·|α)`.
pub fn gaussian_prior_variance(i: usize, alpha: f64) -> f64 {
    (i as f64).powf(-2.0 * alpha - 1.0)
}

/// Discretized Gaussian scale mixture `Σ_t w_t ⊗ N(0, t i^{-(2α+1)})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleMixtureSpec {
    pub alpha: f64,
    /// `(t, weight)` pairs, `t` strictly increasing, weights summing to one.
    pub grid: Vec<(f64, f64)>,
}

impl ScaleMixtureSpec {
    /// Normalizes the weights; rejects empty, unsorted or non-positive grids.
    pub fn new(alpha: f64, grid: Vec<(f64, f64)>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if grid.is_empty() {
            return Err(invalid("grid", "scale grid is empty"));
        }
        if grid
            .iter()
            .any(|&(t, w)| !(t > 0.0 && t.is_finite() && w > 0.0 && w.is_finite()))
        {
            return Err(invalid("grid", "scales and weights must be positive and finite"));
        }
        if grid.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid("grid", "scales must be strictly increasing"));
        }
        let total: f64 = grid.iter().map(|g| g.1).sum();
        let grid = grid.into_iter().map(|(t, w)| (t, w / total)).collect();
        Ok(Self { alpha, grid })
    }

    /// 64 log-spaced scales on `[1e-3, 1e3]` carrying the mass of an
    /// inverse-gamma(shape 1, rate 1) law: weight ∝ `t · t^{-2} e^{-1/t}`
    /// (density times the log-spaced cell width).
    pub fn inverse_gamma_default(alpha: f64) -> Result<Self> {
        const N: usize = 64;
        let (lo, hi) = (1e-3f64.ln(), 1e3f64.ln());
        let grid = (0..N)
            .map(|j| {
                let t = (lo + (hi - lo) * j as f64 / (N - 1) as f64).exp();
                (t, t.powi(-2) * (-1.0 / t).exp() * t)
            })
            // e^{-1000} underflows; drop cells with no representable mass
            .filter(|&(_, w)| w > 0.0)
            .collect();
        Self::new(alpha, grid)
    }
}

/// `t · i^{-(2α+1)}`; with `α = 2` this is `t i^{-5}`.
pub fn scale_mixture_component_variance(i: usize, t: f64, spec: &ScaleMixtureSpec) -> f64 {
    t * (i as f64).powf(-(2.0 * spec.alpha + 1.0))
}
