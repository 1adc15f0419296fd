//! Sequence-model primitives: parameter classes, coefficient vectors and
//! observation simulation.

use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngSpec;

/// Sobolev ellipsoid `{θ : Σ i^{2α₀} θ_i² ≤ B²}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidSpec {
    pub alpha0: f64,
    #[serde(rename = "B")]
    pub radius: f64,
}

impl EllipsoidSpec {
    pub fn new(alpha0: f64, radius: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(invalid("alpha0", format!("must be positive, got {alpha0}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("B", format!("must be positive, got {radius}")));
        }
        Ok(Self { alpha0, radius })
    }
}

/// Noise level and truncation dimension of the observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub eps2: f64,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(eps2: f64, p: usize) -> Result<Self> {
        if !(eps2 > 0.0 && eps2.is_finite()) {
            return Err(invalid("eps2", format!("must be positive, got {eps2}")));
        }
        if p == 0 {
            return Err(invalid("p", "truncation dimension must be at least 1"));
        }
        Ok(Self { eps2, p })
    }

    pub fn eps(&self) -> f64 {
        self.eps2.sqrt()
    }

    pub(crate) fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                actual: v.len(),
            });
        }
        Ok(())
    }
}

/// Finite coefficient vector `(v_1, …, v_p)`; index `i` is stored at `i - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CoefVector(Vec<f64>);

impl CoefVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index: index + 1 });
        }
        Ok(Self(coords))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| v.is_finite()));
        Self(coords)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn dist_sq(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.0.iter().map(|v| v * c).collect())
    }
}

impl Deref for CoefVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for CoefVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CoefVector> for Vec<f64> {
    fn from(v: CoefVector) -> Self {
        v.0
    }
}

/// Truncated Sobolev functional `Σ_{i≤p} i^{2α₀} θ_i²`.
pub fn sobolev_norm_sq(theta: &[f64], alpha0: f64) -> f64 {
    theta
        .iter()
        .enumerate()
        .map(|(j, t)| ((j + 1) as f64).powf(2.0 * alpha0) * t * t)
        .sum()
}

/// Relative slack so that points constructed on the boundary count as inside.
pub const MEMBERSHIP_RTOL: f64 = 1e-12;

/// Membership in `E(α₀, B)` using the truncated sum.
pub fn in_ellipsoid(theta: &[f64], spec: &EllipsoidSpec) -> bool {
    sobolev_norm_sq(theta, spec.alpha0) <= spec.radius * spec.radius * (1.0 + MEMBERSHIP_RTOL)
}

/// Draw `x_i = θ_i + ε z_i` using replication 0 of `rng`.
pub fn simulate_observation(theta: &CoefVector, model: &ModelSpec, rng: &RngSpec) -> Result<CoefVector> {
    model.check_len(theta)?;
    Ok(simulate_with(theta, model, &mut rng.rng()))
}

/// Same as [`simulate_observation`] with a caller-owned generator.
pub fn simulate_with<R: Rng + ?Sized>(theta: &[f64], model: &ModelSpec, rng: &mut R) -> CoefVector {
    let eps = model.eps();
    CoefVector::from_raw(
        theta
            .iter()
            .map(|t| {
                let z: f64 = rng.sample(StandardNormal);
                t + eps * z
            })
            .collect(),
    )
}
