//! Exact posterior of the hierarchical sieve prior.
//!
//! Given `(d, k)` the prior is a product of centred Gaussians, so the
//! posterior factorizes as
//!
//! ```text
//! Π(·|x) = Σ_k F(k|x) Σ_d M(d|x,k) S(·|x,d,k)
//! S(·|x,d,k) = ⊗_{i≤d} N(s_{idk} x_i, ε² s_{idk}) ⊗ δ_0 beyond d
//! s_{idk}    = r/(1+r),  r = (d/i)^{2k+1}
//! ```
//!
//! with joint log-weight
//! `log F(k) + log M(d) + Σ_{i≤d} [ -½ log(1+r) + x_i² s_{idk} / (2ε²) ]`.
//! `r` is never formed: with `ℓ = (2k+1)(log d - log i)` we use
//! `log(1+r) = softplus(ℓ)` and `s = sigmoid(ℓ)`, and all normalization is
//! done by log-sum-exp.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::math::{log_sum_exp, normalize_log_weights, sample_log_weights, sigmoid};
use crate::model::{in_ellipsoid, simulate_with, CoefVector, EllipsoidSpec, ModelSpec};
use crate::priors::HyperParams;
use crate::rng::RngSpec;

/// Default level above which the truncated prior tail is reported.
pub const TAIL_MASS_WARNING: f64 = 1e-10;

/// Posterior shrinkage `1 - 1/((d/i)^{2k+1} + 1)` of coordinate `i` under
/// component `(d, k)`. Only defined for `1 ≤ i ≤ d`.
pub fn shrinkage(i: usize, d: usize, k: usize) -> Result<f64> {
    if i == 0 || k == 0 {
        return Err(invalid("i", "indices start at 1"));
    }
    if i > d {
        return Err(invalid(
            "i",
            format!("coordinate {i} lies above the dimension {d} and is degenerate at 0"),
        ));
    }
    Ok(shrink_raw(i, d, k))
}

#[inline]
fn log_ratio(i: usize, d: usize, k: usize) -> f64 {
    (2 * k + 1) as f64 * ((d as f64).ln() - (i as f64).ln())
}

#[inline]
fn shrink_raw(i: usize, d: usize, k: usize) -> f64 {
    sigmoid(log_ratio(i, d, k))
}

/// Shrinkage table and `Σ_{i≤d} log(1+r)` for every `(k, d)`. Since the log
/// ratio is non-negative, sigmoid and softplus share one `exp(-ℓ)`.
fn tabulate(k_max: usize, d_max: usize) -> (ShrinkTable, Vec<f64>) {
    let ln: Vec<f64> = (0..=d_max).map(|i| (i as f64).ln()).collect();
    let block = d_max * (d_max + 1) / 2;
    let mut data = Vec::with_capacity(block * k_max);
    let mut log_det = Vec::with_capacity(k_max * d_max);
    for k in 1..=k_max {
        let a = (2 * k + 1) as f64;
        for d in 1..=d_max {
            let mut acc = 0.0;
            for i in 1..=d {
                let l = a * (ln[d] - ln[i]);
                let e = (-l).exp();
                data.push(1.0 / (1.0 + e));
                acc += l + e.ln_1p();
            }
            log_det.push(acc);
        }
    }
    let table = ShrinkTable {
        k_max,
        d_max,
        block,
        data,
    };
    (table, log_det)
}

/// Shrinkage factors for every `(k, d, i ≤ d)`, stored triangularly.
#[derive(Debug)]
pub struct ShrinkTable {
    k_max: usize,
    d_max: usize,
    block: usize,
    data: Vec<f64>,
}

impl ShrinkTable {
    /// Factors `s_{1dk}, …, s_{ddk}`.
    #[inline]
    pub fn column(&self, d: usize, k: usize) -> &[f64] {
        let start = (k - 1) * self.block + d * (d - 1) / 2;
        &self.data[start..start + d]
    }

    pub fn get(&self, i: usize, d: usize, k: usize) -> Option<f64> {
        if i == 0 || i > d || d > self.d_max || k == 0 || k > self.k_max {
            return None;
        }
        Some(self.column(d, k)[i - 1])
    }
}

/// Posterior weights and mean for one observation.
#[derive(Debug, Clone)]
pub struct PosteriorSummary {
    /// `log F(k|x)` for `k = 1..=k_max`.
    pub log_f_post: Vec<f64>,
    /// `log M(d|x,k)`: `log_m_post[k-1][d-1]`, each row normalized over `d`.
    pub log_m_post: Vec<Vec<f64>>,
    /// Shrinkage factors `s(i,d,k)`.
    pub shrink: Arc<ShrinkTable>,
    pub mean: CoefVector,
    /// Prior mass discarded by truncating at `(k_max, d_max)`.
    pub tail_mass_bound: f64,
}

impl PosteriorSummary {
    pub fn tail_mass_exceeds(&self, threshold: f64) -> bool {
        self.tail_mass_bound > threshold
    }

    /// Normalized joint log-weight of `(d, k)`.
    pub fn log_joint(&self, d: usize, k: usize) -> f64 {
        self.log_f_post[k - 1] + self.log_m_post[k - 1][d - 1]
    }
}

/// The posterior machinery for fixed `(hp, model)`: prior log-masses,
/// determinant terms and shrinkage factors are tabulated once and reused
/// for every observation.
#[derive(Debug, Clone)]
pub struct SievePosterior {
    hp: HyperParams,
    model: ModelSpec,
    /// `log F(k) + log M(d) - ½ Σ_{i≤d} log(1+r)`, index `(k-1)*d_max + d-1`.
    log_base: Vec<f64>,
    shrink: Arc<ShrinkTable>,
}

impl SievePosterior {
    pub fn new(hp: &HyperParams, model: &ModelSpec) -> Result<Self> {
        hp.validate_for(model)?;
        let (k_max, d_max) = (hp.k_max, hp.d_max);
        let log_f = hp.log_f_truncated();
        let log_m = hp.log_m_truncated();
        let (shrink, log_det) = tabulate(k_max, d_max);
        let log_base = log_det
            .iter()
            .enumerate()
            .map(|(c, ld)| log_f[c / d_max] + log_m[c % d_max] - 0.5 * ld)
            .collect();
        Ok(Self {
            hp: *hp,
            model: *model,
            log_base,
            shrink: Arc::new(shrink),
        })
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn shrink_table(&self) -> &ShrinkTable {
        &self.shrink
    }

    /// Unnormalized joint log-weights over `(k, d)` in row-major `k` order.
    pub fn joint_log_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.model.check_len(x)?;
        let (k_max, d_max) = (self.hp.k_max, self.hp.d_max);
        let inv = 0.5 / self.model.eps2;
        let x2: Vec<f64> = x.iter().map(|v| v * v * inv).collect();
        let mut out = Vec::with_capacity(k_max * d_max);
        for k in 1..=k_max {
            for d in 1..=d_max {
                let col = self.shrink.column(d, k);
                let quad: f64 = col.iter().zip(&x2).map(|(s, q)| s * q).sum();
                out.push(self.log_base[(k - 1) * d_max + d - 1] + quad);
            }
        }
        if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite log-weight at (k = {}, d = {})",
                pos / d_max + 1,
                pos % d_max + 1
            )));
        }
        Ok(out)
    }

    fn normalized_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut lw = self.joint_log_weights(x)?;
        let lse = normalize_log_weights(&mut lw);
        if !lse.is_finite() {
            return Err(Error::Numerical("posterior normalizer is not finite".into()));
        }
        Ok(lw)
    }

    /// `log F(k|x)` and `log M(d|x,k)` from normalized joint weights.
    fn split(&self, joint: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d_max = self.hp.d_max;
        let mut log_f = Vec::with_capacity(self.hp.k_max);
        let mut log_m = Vec::with_capacity(self.hp.k_max);
        for row in joint.chunks_exact(d_max) {
            let lf = log_sum_exp(row);
            log_f.push(lf);
            let mut r: Vec<f64> = row.to_vec();
            normalize_log_weights(&mut r);
            log_m.push(r);
        }
        (log_f, log_m)
    }

    pub fn log_m_posterior(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        if k == 0 || k > self.hp.k_max {
            return Err(invalid("k", format!("must lie in 1..={}", self.hp.k_max)));
        }
        let lw = self.joint_log_weights(x)?;
        let d_max = self.hp.d_max;
        let mut row = lw[(k - 1) * d_max..k * d_max].to_vec();
        normalize_log_weights(&mut row);
        Ok(row)
    }

    pub fn log_f_posterior(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lw = self.joint_log_weights(x)?;
        let mut lf: Vec<f64> = lw.chunks_exact(self.hp.d_max).map(log_sum_exp).collect();
        normalize_log_weights(&mut lf);
        Ok(lf)
    }

    fn mean_from_joint(&self, x: &[f64], joint: &[f64]) -> CoefVector {
        let d_max = self.hp.d_max;
        // factor_i = Σ_{k, d ≥ i} w(k,d) s(i,d,k)
        let mut factor = vec![0.0; self.model.p];
        for (c, lw) in joint.iter().enumerate() {
            let w = lw.exp();
            if w == 0.0 {
                continue;
            }
            let (k, d) = (c / d_max + 1, c % d_max + 1);
            for (f, s) in factor.iter_mut().zip(self.shrink.column(d, k)) {
                *f += w * s;
            }
        }
        CoefVector::from_raw(x.iter().zip(&factor).map(|(xi, f)| xi * f).collect())
    }

    /// Posterior mean `θ̂_i = x_i Σ_k F(k|x) Σ_{d≥i} M(d|x,k) s(i,d,k)`.
    pub fn mean(&self, x: &[f64]) -> Result<CoefVector> {
        let joint = self.normalized_joint(x)?;
        Ok(self.mean_from_joint(x, &joint))
    }

    pub fn summary(&self, x: &[f64]) -> Result<PosteriorSummary> {
        let joint = self.normalized_joint(x)?;
        let mean = self.mean_from_joint(x, &joint);
        let (log_f_post, log_m_post) = self.split(&joint);
        let tail_mass_bound = self.hp.truncated_tail_mass();
        if tail_mass_bound > TAIL_MASS_WARNING {
            log::warn!("truncated prior tail mass {tail_mass_bound:.3e} exceeds {TAIL_MASS_WARNING:.0e}");
        }
        Ok(PosteriorSummary {
            log_f_post,
            log_m_post,
            shrink: Arc::clone(&self.shrink),
            mean,
            tail_mass_bound,
        })
    }

    /// Exact hierarchical draws: `k ~ F(·|x)`, `d ~ M(·|x,k)`, then
    /// independent Gaussians on the first `d` coordinates.
    pub fn sample_with<R: Rng + ?Sized>(&self, x: &[f64], n: usize, rng: &mut R) -> Result<Vec<PosteriorDraw>> {
        let joint = self.normalized_joint(x)?;
        let (log_f, log_m) = self.split(&joint);
        let eps2 = self.model.eps2;
        Ok((0..n)
            .map(|_| {
                let k = sample_log_weights(&log_f, rng.random::<f64>()) + 1;
                let d = sample_log_weights(&log_m[k - 1], rng.random::<f64>()) + 1;
                let mut theta = vec![0.0; self.model.p];
                for ((t, s), xi) in theta.iter_mut().zip(self.shrink.column(d, k)).zip(x) {
                    let z: f64 = rng.sample(StandardNormal);
                    *t = s * xi + (eps2 * s).sqrt() * z;
                }
                PosteriorDraw {
                    k,
                    d,
                    theta: CoefVector::from_raw(theta),
                }
            })
            .collect())
    }

    pub fn sample(&self, x: &[f64], n: usize, rng: &RngSpec) -> Result<Vec<CoefVector>> {
        if n == 0 {
            return Err(invalid("n", "need at least one draw"));
        }
        Ok(self
            .sample_with(x, n, &mut rng.rng())?
            .into_iter()
            .map(|d| d.theta)
            .collect())
    }
}

/// A posterior draw with its latent `(k, d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub k: usize,
    pub d: usize,
    pub theta: CoefVector,
}

pub fn log_m_posterior(x: &[f64], k: usize, hp: &HyperParams, model: &ModelSpec) -> Result<Vec<f64>> {
    SievePosterior::new(hp, model)?.log_m_posterior(x, k)
}

pub fn log_f_posterior(x: &[f64], hp: &HyperParams, model: &ModelSpec) -> Result<Vec<f64>> {
    SievePosterior::new(hp, model)?.log_f_posterior(x)
}

pub fn posterior_mean(x: &[f64], hp: &HyperParams, model: &ModelSpec) -> Result<CoefVector> {
    SievePosterior::new(hp, model)?.mean(x)
}

pub fn sample_posterior(
    x: &[f64],
    n: usize,
    hp: &HyperParams,
    model: &ModelSpec,
    rng: &RngSpec,
) -> Result<Vec<CoefVector>> {
    SievePosterior::new(hp, model)?.sample(x, n, rng)
}

/// Settings for the Monte Carlo posterior tail probe.
#[derive(Debug, Clone, Copy)]
pub struct TailProbe {
    /// Outer replications (fresh observations).
    pub reps: usize,
    /// Posterior draws per observation.
    pub inner_draws: usize,
}

impl Default for TailProbe {
    fn default() -> Self {
        Self {
            reps: 200,
            inner_draws: 200,
        }
    }
}

/// Contraction threshold `(ε/B)^{4α₀/(2α₀+1)}` on the `‖θ-θ₀‖²/B²` scale.
pub fn contraction_rate(spec: &EllipsoidSpec, model: &ModelSpec) -> f64 {
    let a = spec.alpha0;
    (model.eps() / spec.radius).powf(4.0 * a / (2.0 * a + 1.0))
}

/// Monte Carlo estimate of `E_{θ₀} Π(‖θ-θ₀‖²/B² ≥ C·rate | X)` for each `C`
/// in `cs`. All values share the same observations and posterior draws, so
/// the returned curve is non-increasing in `C` pathwise.
pub fn posterior_tail_curve(
    theta0: &CoefVector,
    spec: &EllipsoidSpec,
    cs: &[f64],
    model: &ModelSpec,
    hp: &HyperParams,
    probe: TailProbe,
    rng: &RngSpec,
) -> Result<Vec<f64>> {
    model.check_len(theta0)?;
    if !in_ellipsoid(theta0, spec) {
        return Err(invalid("theta0", "true parameter lies outside the ellipsoid"));
    }
    if probe.reps == 0 || probe.inner_draws == 0 {
        return Err(invalid("reps", "replication counts must be positive"));
    }
    if let Some(c) = cs.iter().find(|c| !(**c >= 0.0)) {
        return Err(invalid(
            "C",
            format!("threshold multiplier must be non-negative, got {c}"),
        ));
    }
    let post = SievePosterior::new(hp, model)?;
    let scale = spec.radius * spec.radius;
    let rate = contraction_rate(spec, model);
    let per_rep: Vec<Vec<f64>> = (0..probe.reps)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let mut g = rng.replication(r as u64);
            let x = simulate_with(theta0, model, &mut g);
            let draws = post.sample_with(&x, probe.inner_draws, &mut g)?;
            let losses: Vec<f64> = draws.iter().map(|d| d.theta.dist_sq(theta0) / scale).collect();
            Ok(cs
                .iter()
                .map(|c| {
                    let thr = c * rate;
                    losses.iter().filter(|l| **l >= thr).count() as f64 / losses.len() as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; cs.len()];
    for row in &per_rep {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Ok(out.into_iter().map(|v| v / probe.reps as f64).collect())
}

/// Single-threshold form of [`posterior_tail_curve`] with
/// `TailProbe::default().inner_draws` posterior draws per observation.
pub fn posterior_tail_probability(
    theta0: &CoefVector,
    spec: &EllipsoidSpec,
    c: f64,
    model: &ModelSpec,
    hp: &HyperParams,
    reps: usize,
    rng: &RngSpec,
) -> Result<f64> {
    let probe = TailProbe {
        reps,
        ..TailProbe::default()
    };
    Ok(posterior_tail_curve(theta0, spec, &[c], model, hp, probe, rng)?[0])
}
