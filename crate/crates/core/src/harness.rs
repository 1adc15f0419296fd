//! Monte Carlo risk evaluation and experiment orchestration.
//!
//! Losses are normalized, `‖θ̂ - θ‖² / B²`. Within one `B²` value every
//! estimator sees the same simulated observations (replication `r` of the
//! `B²`-specific substream), and per-replication losses are reduced in index
//! order, so reports are bit-identical for any worker count.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{EstimatorKind, EstimatorSpec, PreparedEstimator};
use crate::math::{mean_std, riemann_zeta};
use crate::model::{simulate_with, CoefVector, EllipsoidSpec, ModelSpec};
use crate::priors::HyperParams;
use crate::regression::{reconstruct, FunctionEstimate};
use crate::rng::RngSpec;

pub const DEFAULT_REPS: usize = 1000;

/// The four parameter sequences used in the experiments; each is linear in
/// the radius `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ThetaFamily {
    /// `θ_i = B i^{-0.52} / √100`
    Theta1,
    /// `θ_1 = B`, zero elsewhere
    Theta2,
    /// `θ_i = B i^{-0.65} / √4`
    Theta3,
    /// `θ_i = B i^{-3} / √(π⁴/90)`
    Theta4,
}

impl TryFrom<u32> for ThetaFamily {
    type Error = Error;
    fn try_from(tag: u32) -> Result<Self> {
        match tag {
            1 => Ok(Self::Theta1),
            2 => Ok(Self::Theta2),
            3 => Ok(Self::Theta3),
            4 => Ok(Self::Theta4),
            other => Err(Error::UnknownFamily(other)),
        }
    }
}

impl From<ThetaFamily> for u32 {
    fn from(f: ThetaFamily) -> u32 {
        match f {
            ThetaFamily::Theta1 => 1,
            ThetaFamily::Theta2 => 2,
            ThetaFamily::Theta3 => 3,
            ThetaFamily::Theta4 => 4,
        }
    }
}

impl ThetaFamily {
    /// `(c, a)` with `θ_i = c B i^{-a}`; `None` for the spike.
    fn power_law(self) -> Option<(f64, f64)> {
        match self {
            Self::Theta1 => Some((0.1, 0.52)),
            Self::Theta2 => None,
            Self::Theta3 => Some((0.5, 0.65)),
            Self::Theta4 => Some(((90.0 / PI.powi(4)).sqrt(), 3.0)),
        }
    }

    pub fn vector(self, radius: f64, p: usize) -> CoefVector {
        let coords = match self.power_law() {
            Some((c, a)) => (1..=p).map(|i| c * radius * (i as f64).powf(-a)).collect(),
            None => {
                let mut v = vec![0.0; p];
                v[0] = radius;
                v
            }
        };
        CoefVector::from_raw(coords)
    }

    /// Untruncated `Σ_{i≥1} i^{2α₀} θ_i²` (infinite when the series
    /// diverges).
    pub fn sobolev_norm_sq_infinite(self, alpha0: f64, radius: f64) -> f64 {
        match self.power_law() {
            Some((c, a)) => radius * radius * c * c * riemann_zeta(2.0 * a - 2.0 * alpha0),
            None => radius * radius,
        }
    }

    /// Membership of the untruncated sequence in `E(α₀, B)`.
    pub fn in_ellipsoid_analytic(self, spec: &EllipsoidSpec) -> bool {
        self.sobolev_norm_sq_infinite(spec.alpha0, spec.radius) <= spec.radius * spec.radius
    }
}

pub fn theta_family(tag: u32, radius: f64, p: usize) -> Result<CoefVector> {
    Ok(ThetaFamily::try_from(tag)?.vector(radius, p))
}

/// Pinsker's constant `(2α₀+1)^{1/(2α₀+1)} (α₀/(α₀+1))^{4α₀/(2α₀+1)}`.
pub fn pinsker_constant(alpha0: f64) -> Result<f64> {
    if !(alpha0 > 0.0 && alpha0.is_finite()) {
        return Err(invalid("alpha0", format!("must be positive, got {alpha0}")));
    }
    let s = 2.0 * alpha0 + 1.0;
    Ok(s.powf(1.0 / s) * (alpha0 / (alpha0 + 1.0)).powf(4.0 * alpha0 / s))
}

/// Asymptotic minimax benchmark `c_P(α₀) (ε/B)^{4α₀/(2α₀+1)}` for the
/// normalized risk; requires `0 < ε ≤ B`.
pub fn minimax_reference(alpha0: f64, radius: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !(radius > 0.0) {
        return Err(invalid("eps", "noise level and radius must be positive"));
    }
    if eps > radius {
        return Err(invalid("eps", format!("ε = {eps} exceeds B = {radius}")));
    }
    let ratio = eps / radius;
    Ok(pinsker_constant(alpha0)? * ratio.powf(4.0 * alpha0 / (2.0 * alpha0 + 1.0)))
}

/// Worst-case witness for truncation at `d`: `θ_{d+1} = B (d+1)^{-α₀}`, zero
/// elsewhere. It lies on the boundary of `E(α₀, B)`.
pub fn truncation_witness(d: usize, spec: &EllipsoidSpec, p: usize) -> Result<CoefVector> {
    if d >= p {
        return Err(invalid("d", format!("witness needs d < p = {p}")));
    }
    let mut v = vec![0.0; p];
    v[d] = spec.radius * ((d + 1) as f64).powf(-spec.alpha0);
    Ok(CoefVector::from_raw(v))
}

/// Exact normalized risk of truncation at `d`: `(Σ_{i>d} θ_i² + d ε²) / B²`.
pub fn truncation_risk(theta: &[f64], d: usize, eps2: f64, b2: f64) -> f64 {
    let tail: f64 = theta.iter().skip(d).map(|v| v * v).sum();
    (tail + d.min(theta.len()) as f64 * eps2) / b2
}

/// Bias² and variance of the first coordinate of a linear shrinker
/// `θ̂_1 = x_1 / (1 + ε²)` at `θ_1 = B`.
pub fn unit_variance_coordinate_risk(radius: f64, eps2: f64) -> (f64, f64) {
    let shrink = 1.0 / (1.0 + eps2);
    let bias = (1.0 - shrink) * radius;
    (bias * bias, shrink * shrink * eps2)
}

/// Monte Carlo mean and standard deviation of a normalized loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std: f64,
    pub reps: usize,
}

impl RiskEstimate {
    pub fn std_error(&self) -> f64 {
        self.std / (self.reps as f64).sqrt()
    }

    fn from_losses(losses: &[f64]) -> Self {
        let (mean, std) = mean_std(losses);
        Self {
            mean,
            std,
            reps: losses.len(),
        }
    }
}

fn losses_for(
    estimators: &[PreparedEstimator],
    theta: &CoefVector,
    model: &ModelSpec,
    b2: f64,
    reps: usize,
    rng: &RngSpec,
) -> Result<Vec<Vec<f64>>> {
    let per_rep: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = simulate_with(theta, model, &mut rng.replication(r as u64));
            estimators
                .iter()
                .map(|e| Ok(e.estimate(&x)?.dist_sq(theta) / b2))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..estimators.len())
        .map(|e| per_rep.iter().map(|row| row[e]).collect())
        .collect())
}

/// Risk of one estimator at `θ`, normalized by `b2`.
pub fn evaluate_risk(
    est: &PreparedEstimator,
    theta: &CoefVector,
    b2: f64,
    reps: usize,
    rng: &RngSpec,
) -> Result<RiskEstimate> {
    let model = est.spec().model;
    model.check_len(theta)?;
    if reps < 2 {
        return Err(invalid("reps", "need at least two replications"));
    }
    if !(b2 > 0.0) {
        return Err(invalid("B2", format!("must be positive, got {b2}")));
    }
    let losses = losses_for(std::slice::from_ref(est), theta, &model, b2, reps, rng)?;
    Ok(RiskEstimate::from_losses(&losses[0]))
}

/// Where the true parameter comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSource {
    Family(ThetaFamily),
    /// Shape at `B = 1`; scaled by `B = √B²`.
    Custom(Vec<f64>),
}

impl ThetaSource {
    pub fn vector(&self, radius: f64, p: usize) -> Result<CoefVector> {
        match self {
            Self::Family(f) => Ok(f.vector(radius, p)),
            Self::Custom(v) => {
                if v.len() != p {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        actual: v.len(),
                    });
                }
                CoefVector::new(v.iter().map(|c| c * radius).collect())
            }
        }
    }
}

/// A full risk sweep over estimators and radii.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub hp: HyperParams,
    pub estimators: Vec<EstimatorKind>,
    pub theta: ThetaSource,
    pub b2_values: Vec<f64>,
    pub reps: usize,
    pub rng: RngSpec,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(invalid("reps", "need at least two replications"));
        }
        if self.b2_values.is_empty() {
            return Err(invalid("B2", "no radii given"));
        }
        if let Some(b) = self.b2_values.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(invalid("B2", format!("values must be positive, got {b}")));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "no estimators given"));
        }
        self.hp.validate_for(&self.model)?;
        for kind in &self.estimators {
            EstimatorSpec::new(kind.clone(), self.hp, self.model)?;
        }
        Ok(())
    }

    pub fn prepare_estimators(&self) -> Result<Vec<PreparedEstimator>> {
        self.estimators
            .iter()
            .map(|k| EstimatorSpec::new(k.clone(), self.hp, self.model)?.prepare())
            .collect()
    }
}

/// One `(estimator, B²)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub estimator: String,
    #[serde(rename = "B2")]
    pub b2: f64,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub reps: usize,
    pub seed: u64,
}

impl RiskRow {
    pub fn std_error(&self) -> f64 {
        self.loss_std / (self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub rows: Vec<RiskRow>,
}

impl RiskReport {
    pub fn get(&self, estimator: &str, b2: f64) -> Option<&RiskRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.b2 == b2)
    }

    /// CSV with header `estimator,B2,loss_mean,loss_std,reps,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// Sweep every `(estimator, B²)` pair. Deterministic in `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RiskReport> {
    cfg.validate()?;
    let estimators = cfg.prepare_estimators()?;
    let mut rows = Vec::with_capacity(estimators.len() * cfg.b2_values.len());
    for (b, &b2) in cfg.b2_values.iter().enumerate() {
        let theta = cfg.theta.vector(b2.sqrt(), cfg.model.p)?;
        let stream = cfg.rng.substream(b as u64);
        let losses = losses_for(&estimators, &theta, &cfg.model, b2, cfg.reps, &stream)?;
        for (est, l) in estimators.iter().zip(&losses) {
            let r = RiskEstimate::from_losses(l);
            rows.push(RiskRow {
                estimator: est.name(),
                b2,
                loss_mean: r.mean,
                loss_std: r.std,
                reps: r.reps,
                seed: cfg.rng.seed,
            });
        }
    }
    Ok(RiskReport { rows })
}

/// Outcome of the small-ball Monte Carlo probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmallBallEstimate {
    Estimate {
        probability: f64,
        std_error: f64,
        hits: u64,
        reps: u64,
    },
    /// No hits: only the one-sided 95% bound `3/reps` is reported.
    UpperBound { bound: f64, reps: u64 },
}

impl SmallBallEstimate {
    pub fn probability(&self) -> Option<f64> {
        match self {
            Self::Estimate { probability, .. } => Some(*probability),
            Self::UpperBound { .. } => None,
        }
    }
}

const SMALL_BALL_CHUNK: u64 = 4096;

/// `Pr(Σ_{i≤d} (i^{-α-1/2} N_i - v_i)² ≤ d^{-2α})` by plain Monte Carlo.
pub fn small_ball_mc(alpha: f64, d: usize, v: &[f64], reps: u64, rng: &RngSpec) -> Result<SmallBallEstimate> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if v.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: v.len(),
        });
    }
    if !(alpha > 0.0) {
        return Err(invalid("alpha", format!("must be positive, got {alpha}")));
    }
    if reps == 0 {
        return Err(invalid("reps", "must be positive"));
    }
    let scales: Vec<f64> = (1..=d).map(|i| (i as f64).powf(-alpha - 0.5)).collect();
    let radius_sq = (d as f64).powf(-2.0 * alpha);
    let chunks = reps.div_ceil(SMALL_BALL_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = rng.replication(c);
            let n = SMALL_BALL_CHUNK.min(reps - c * SMALL_BALL_CHUNK);
            let mut hits = 0u64;
            for _ in 0..n {
                let mut acc = 0.0;
                for (s, vi) in scales.iter().zip(v) {
                    let z: f64 = g.sample(StandardNormal);
                    let e = s * z - vi;
                    acc += e * e;
                }
                if acc <= radius_sq {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    if hits == 0 {
        log::warn!("small-ball probe: no hits in {reps} draws (d = {d})");
        return Ok(SmallBallEstimate::UpperBound {
            bound: 3.0 / reps as f64,
            reps,
        });
    }
    let p = hits as f64 / reps as f64;
    Ok(SmallBallEstimate::Estimate {
        probability: p,
        std_error: (p * (1.0 - p) / reps as f64).sqrt(),
        hits,
        reps,
    })
}

/// Calibrate `c₃` from the centred ball: the smallest `c` with
/// `P̂(0; d) - z·SE ≥ e^{-c d}` for every `d` in `dims`. `z = 0` gives the
/// plain point fit.
pub fn fit_small_ball_c3(alpha: f64, dims: &[usize], reps: u64, z: f64, rng: &RngSpec) -> Result<f64> {
    let mut c3 = 0.0f64;
    for (j, &d) in dims.iter().enumerate() {
        let est = small_ball_mc(alpha, d, &vec![0.0; d], reps, &rng.substream(j as u64))?;
        let SmallBallEstimate::Estimate {
            probability, std_error, ..
        } = est
        else {
            return Err(Error::Numerical(format!("no small-ball hits at d = {d}")));
        };
        let lower = probability - z * std_error;
        if !(lower > 0.0) {
            return Err(Error::Numerical(format!("lower confidence bound vanishes at d = {d}")));
        }
        c3 = c3.max(-lower.ln() / d as f64);
    }
    Ok(c3)
}

/// Lower bound `-Σ i^{2α+1} v_i² / 2 - c₃ d` on the log small-ball
/// probability.
pub fn small_ball_log_bound(alpha: f64, v: &[f64], c3: f64) -> f64 {
    let quad: f64 = v
        .iter()
        .enumerate()
        .map(|(j, vi)| ((j + 1) as f64).powf(2.0 * alpha + 1.0) * vi * vi)
        .sum();
    -0.5 * quad - c3 * v.len() as f64
}

/// Curves of the white-noise representation `t ↦ Σ_{i≤p} v_i φ_i(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteNoiseCurves {
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub observation: Vec<f64>,
    pub estimates: Vec<(String, Vec<f64>)>,
}

impl WhiteNoiseCurves {
    /// CSV with header `t,true,observation,<estimator>...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string(), "true".into(), "observation".into()];
        header.extend(self.estimates.iter().map(|e| e.0.clone()));
        w.write_record(&header)?;
        for (j, t) in self.grid.iter().enumerate() {
            let mut rec = vec![
                t.to_string(),
                self.truth[j].to_string(),
                self.observation[j].to_string(),
            ];
            rec.extend(self.estimates.iter().map(|e| e.1[j].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `{0.001 i : i = 1..=1000}`.
pub fn white_noise_grid() -> Vec<f64> {
    (1..=1000).map(|i| i as f64 / 1000.0).collect()
}

/// Simulate one observation at `theta` and render truth, observation and
/// estimates on `grid`.
pub fn white_noise_curves(
    theta: &CoefVector,
    estimators: &[PreparedEstimator],
    model: &ModelSpec,
    grid: &[f64],
    rng: &RngSpec,
) -> Result<WhiteNoiseCurves> {
    model.check_len(theta)?;
    let x = simulate_with(theta, model, &mut rng.rng());
    let render = |c: &CoefVector| reconstruct(&FunctionEstimate::new(c.clone()), grid);
    let estimates = estimators
        .iter()
        .map(|e| Ok((e.name(), render(&e.estimate(&x)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(WhiteNoiseCurves {
        grid: grid.to_vec(),
        truth: render(theta)?,
        observation: render(&x)?,
        estimates,
    })
}
