use seqadapt::priors::{prior_component_variance, sample_prior_pi};
use seqadapt::{HyperParams, ModelSpec, RngSpec, SievePosterior};

fn geometric_mass(n: usize, rate: f64, n_max: usize) -> f64 {
    let z: f64 = (1..=n_max).map(|m| (-rate * m as f64).exp()).sum();
    (-rate * n as f64).exp() / z
}

#[test]
fn prior_index_frequencies_are_geometric() {
    let model = ModelSpec::new(0.5, 30).unwrap();
    let hp = HyperParams::new(1.0, 0.7, 10, 30).unwrap();
    let rng = RngSpec::new(11, 0);
    let n = 40_000;
    let mut k_counts = vec![0usize; hp.k_max + 1];
    let mut d_counts = vec![0usize; hp.d_max + 1];
    for r in 0..n {
        let draw = sample_prior_pi(&hp, &model, &rng.substream(r)).unwrap();
        k_counts[draw.k] += 1;
        d_counts[draw.d] += 1;
        assert!(draw.theta[draw.d..].iter().all(|v| *v == 0.0));
    }
    for (counts, rate, max) in [(&k_counts, hp.gamma, hp.k_max), (&d_counts, hp.eta, hp.d_max)] {
        for m in 1..=4 {
            let q = geometric_mass(m, rate, max);
            let se = (q * (1.0 - q) / n as f64).sqrt();
            let f = counts[m] as f64 / n as f64;
            assert!((f - q).abs() < 5.0 * se, "index {m}: {f} vs {q}");
        }
    }
}

#[test]
fn prior_coordinate_variance_given_indices() {
    let model = ModelSpec::new(1.0, 6).unwrap();
    let hp = HyperParams::new(3.0, 3.0, 1, 6).unwrap();
    let rng = RngSpec::new(12, 0);
    // Condition on (k, d) = (1, 1): θ_1 ~ N(0, ε²).
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for r in 0..60_000 {
        let draw = sample_prior_pi(&hp, &model, &rng.substream(r)).unwrap();
        if draw.d == 1 {
            sum_sq += draw.theta[0] * draw.theta[0];
            n += 1;
        }
    }
    let want = prior_component_variance(1, 1, 1, 1.0);
    let got = sum_sq / n as f64;
    let se = want * (2.0 / n as f64).sqrt();
    assert!((got - want).abs() < 5.0 * se, "{got} vs {want}");
}

#[test]
fn posterior_index_frequencies_match_weights() {
    let model = ModelSpec::new(1.0, 8).unwrap();
    let hp = HyperParams::new(2.0, 2.0, 3, 8).unwrap();
    let post = SievePosterior::new(&hp, &model).unwrap();
    let x = [2.5, -1.8, 1.2, 0.4, -0.3, 0.9, 0.1, -0.6];
    let summary = post.summary(&x).unwrap();
    let n = 200_000;
    let draws = post.sample_with(&x, n, &mut RngSpec::new(13, 0).rng()).unwrap();
    let mut counts = vec![vec![0usize; hp.d_max + 1]; hp.k_max + 1];
    for d in &draws {
        counts[d.k][d.d] += 1;
    }
    for k in 1..=hp.k_max {
        for d in 1..=hp.d_max {
            let q = summary.log_joint(d, k).exp();
            let se = (q * (1.0 - q) / n as f64).sqrt().max(1e-6);
            let f = counts[k][d] as f64 / n as f64;
            assert!((f - q).abs() < 5.0 * se, "(k={k}, d={d}): {f} vs {q}");
        }
    }
}

#[test]
fn posterior_sampling_is_reproducible() {
    let model = ModelSpec::new(1.0, 10).unwrap();
    let hp = HyperParams::defaults_for(&model);
    let post = SievePosterior::new(&hp, &model).unwrap();
    let x = vec![1.0; 10];
    let a = post.sample(&x, 50, &RngSpec::new(3, 1)).unwrap();
    let b = post.sample(&x, 50, &RngSpec::new(3, 1)).unwrap();
    let c = post.sample(&x, 50, &RngSpec::new(3, 2)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
