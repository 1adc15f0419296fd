//! Fixed-design regression `Y_k = f(k/n) + W_k`, `W_k ~ N(0,1)`, reduced to
//! the sequence model via the sampled trigonometric basis.
//!
//! For `j < n` the vectors `(φ_j(1/n), …, φ_j(1))/√n` are orthonormal in
//! `ℝⁿ`, so `x_j = n⁻¹ Σ_k Y_k φ_j(k/n)` is `N(θ_j, 1/n)` with independent
//! coordinates whenever `f` lies in the span of `φ_1..φ_p`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::basis::phi;
use crate::error::{invalid, Error, Result};
use crate::model::{CoefVector, EllipsoidSpec, ModelSpec};
use crate::posterior::SievePosterior;
use crate::priors::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    y: Vec<f64>,
    p: usize,
}

impl RegressionSample {
    pub fn new(y: Vec<f64>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p", "must be at least 1"));
        }
        if p >= y.len() {
            return Err(invalid("p", format!("need p < n, got p = {p}, n = {}", y.len())));
        }
        if let Some(index) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: index + 1 });
        }
        Ok(Self { y, p })
    }

    /// Noiseless-or-not sample of `f` on the design `k/n`, `k = 1..=n`.
    pub fn from_fn(n: usize, p: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((1..=n).map(|k| f(k as f64 / n as f64)).collect(), p)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

/// Coefficients `x_j = n⁻¹ Σ_k y_k φ_j(k/n)`, `j = 1..=p`, and the noise
/// variance `1/n`.
pub fn design_transform(sample: &RegressionSample) -> (CoefVector, f64) {
    let n = sample.n();
    let inv_n = 1.0 / n as f64;
    let coefs = (1..=sample.p)
        .map(|j| {
            sample
                .y
                .iter()
                .enumerate()
                .map(|(k, yk)| yk * phi(j, (k + 1) as f64 * inv_n))
                .sum::<f64>()
                * inv_n
        })
        .collect();
    (CoefVector::from_raw(coefs), inv_n)
}

/// Coefficient estimate in the trigonometric basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionEstimate {
    pub coefs: CoefVector,
}

impl FunctionEstimate {
    pub fn new(coefs: CoefVector) -> Self {
        Self { coefs }
    }

    /// `Σ_i θ̂_i φ_i(t)`; callers ensure `t ∈ [0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.coefs.iter().enumerate().map(|(j, c)| c * phi(j + 1, t)).sum()
    }
}

/// Bayes estimate under the sieve prior restricted to `d ≤ p`, with
/// `ε² = 1/n`. `hp.d_max` is overridden by `p`.
pub fn estimate_regression(sample: &RegressionSample, hp: &HyperParams) -> Result<FunctionEstimate> {
    let (x, eps2) = design_transform(sample);
    let model = ModelSpec::new(eps2, sample.p)?;
    let hp = HyperParams { d_max: sample.p, ..*hp };
    Ok(FunctionEstimate::new(SievePosterior::new(&hp, &model)?.mean(&x)?))
}

/// Worst-case approximation bound `B² p^{-2α₀}`.
pub fn tau_bound(p: usize, spec: &EllipsoidSpec) -> f64 {
    spec.radius * spec.radius * (p as f64).powf(-2.0 * spec.alpha0)
}

pub fn reconstruct(est: &FunctionEstimate, grid: &[f64]) -> Result<Vec<f64>> {
    if let Some(t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(invalid("grid", format!("{t} is outside [0, 1]")));
    }
    Ok(grid.iter().map(|t| est.eval(*t)).collect())
}

/// Weights of the periodic Sobolev class: `a_1 = 0`,
/// `a_{2k} = a_{2k+1} = (2k)^{α₀}`.
pub fn periodic_sobolev_weight(j: usize, alpha0: f64) -> f64 {
    if j <= 1 {
        0.0
    } else {
        ((2 * (j / 2)) as f64).powf(alpha0)
    }
}

/// Membership of `Σ θ_j φ_j` in `W(α₀, B)`: `Σ a_j² θ_j² ≤ B² / π^{2α₀}`.
pub fn in_periodic_sobolev(coefs: &[f64], spec: &EllipsoidSpec) -> bool {
    let s: f64 = coefs
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let a = periodic_sobolev_weight(j + 1, spec.alpha0);
            a * a * c * c
        })
        .sum();
    s <= spec.radius * spec.radius / std::f64::consts::PI.powf(2.0 * spec.alpha0)
}

/// Read a sample from CSV: either one column `y` or two columns `t,y` with
/// `t` on the design grid `k/n`. A non-numeric first row is a header.
pub fn read_sample_csv<R: Read>(input: R, p: usize) -> Result<RegressionSample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if line == 0 => continue,
            Err(_) => return Err(invalid("csv", format!("non-numeric value on line {}", line + 1))),
        }
    }
    let width = rows.first().map(Vec::len).unwrap_or(0);
    if !(width == 1 || width == 2) || rows.iter().any(|r| r.len() != width) {
        return Err(invalid(
            "csv",
            "expected one column (y) or two columns (t, y) on every row",
        ));
    }
    let n = rows.len();
    if width == 2 {
        for (k, r) in rows.iter().enumerate() {
            let expect = (k + 1) as f64 / n as f64;
            if (r[0] - expect).abs() > 1e-9 {
                return Err(invalid(
                    "csv",
                    format!("t = {} on row {} is off the design grid k/n", r[0], k + 1),
                ));
            }
        }
    }
    RegressionSample::new(rows.into_iter().map(|r| r[width - 1]).collect(), p)
}

/// CSV with header `t,fhat`.
pub fn write_reconstruction_csv<W: Write>(grid: &[f64], values: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "fhat"])?;
    for (t, v) in grid.iter().zip(values) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
