//! Adaptive Bayesian estimation in the Gaussian sequence model.
//!
//! Observations are `x_i = θ_i + ε z_i` for `i = 1..p`, with `θ` in a
//! Sobolev ellipsoid `Σ i^{2α₀} θ_i² ≤ B²` whose smoothness and radius are
//! unknown. The crate provides:
//!
//! * [`priors`]: the hierarchical sieve prior `Π = Σ_k F(k) Σ_d M(d) S(·|d,k)`
//!   and the Gaussian / scale-mixture priors it is compared against,
//! * [`posterior`]: the exact closed-form posterior of `Π` (weights, mean,
//!   hierarchical sampling, tail probes),
//! * [`estimators`]: the estimator catalog (proposed Bayes, model selection,
//!   model averaging, blockwise James–Stein, ...),
//! * [`harness`]: Monte Carlo risk evaluation, parameter families, Pinsker
//!   reference values and the small-ball probe,
//! * [`regression`]: the fixed-design regression reduction.
//!
//! Everything is computed at a finite truncation `p`; coordinates beyond `p`
//! are zero.

pub mod basis;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod math;
pub mod model;
pub mod posterior;
pub mod priors;
pub mod regression;
pub mod rng;

pub use basis::trig_basis_eval;
pub use error::{Error, Result};
pub use estimators::{EstimatorKind, EstimatorSpec, PreparedEstimator};
pub use harness::{ExperimentConfig, RiskReport, RiskRow, ThetaFamily};
pub use model::{in_ellipsoid, simulate_observation, sobolev_norm_sq, CoefVector, EllipsoidSpec, ModelSpec};
pub use posterior::{PosteriorSummary, SievePosterior};
pub use priors::{HyperParams, ScaleMixtureSpec};
pub use regression::{FunctionEstimate, RegressionSample};
pub use rng::RngSpec;
