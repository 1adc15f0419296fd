//! Shared fixtures for the `seqadapt` benchmarks.

use seqadapt::{simulate_observation, CoefVector, HyperParams, ModelSpec, RngSpec, ThetaFamily};

/// The `p = 100`, `ε² = 1` setting with default hyperparameters.
pub fn standard_setting() -> (ModelSpec, HyperParams) {
    let model = ModelSpec::new(1.0, 100).expect("valid model");
    (model, HyperParams::defaults_for(&model))
}

/// One observation at `θ^(1)` with `B² = 3`.
pub fn standard_observation(model: &ModelSpec) -> CoefVector {
    let theta = ThetaFamily::Theta1.vector(3f64.sqrt(), model.p);
    simulate_observation(&theta, model, &RngSpec::new(1, 0)).expect("valid observation")
}
