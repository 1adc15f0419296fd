//! Small numerically careful helpers shared by the weight computations.

/// `log Σ exp(v_j)` with max-shift. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Shift a vector of log-weights so that `Σ exp(v_j) = 1`. Returns the
/// normalizing constant that was subtracted.
pub fn normalize_log_weights(values: &mut [f64]) -> f64 {
    let lse = log_sum_exp(values);
    for v in values.iter_mut() {
        *v -= lse;
    }
    lse
}

/// `log(1 + e^t)` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-t})` without overflow.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Inverse-CDF draw from normalized log-weights given a uniform `u ∈ [0,1)`.
/// Returns the 0-based index.
pub fn sample_log_weights(log_weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, lw) in log_weights.iter().enumerate() {
        acc += lw.exp();
        if u < acc {
            return j;
        }
    }
    // u landed in the rounding gap above the last cumulative value
    log_weights.iter().rposition(|lw| *lw > f64::NEG_INFINITY).unwrap_or(0)
}

/// Sample mean and (n-1)-denominator standard deviation, summed in index
/// order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Riemann zeta function for real `s > 1` (Euler–Maclaurin with 10 direct
/// terms and four Bernoulli corrections).
pub fn riemann_zeta(s: f64) -> f64 {
    if s <= 1.0 {
        return f64::INFINITY;
    }
    const N: usize = 10;
    let n = N as f64;
    let mut sum: f64 = (1..N).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // B2/2!, B4/4!, B6/6!, B8/8!
    let coefs = [1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0];
    let mut rising = s; // s (s+1) ... (s+2j-2)
    let mut power = n.powf(-s - 1.0);
    for (j, c) in coefs.iter().enumerate() {
        sum += c * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power /= n * n;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_large_arguments() {
        let v = [1234.0, 1232.0];
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_sum_exp(&v) - expected).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn softplus_and_sigmoid_extremes() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(sigmoid(800.0), 1.0);
        assert!(sigmoid(-800.0) > 0.0 || sigmoid(-800.0) == 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zeta_known_values() {
        let pi = std::f64::consts::PI;
        assert!((riemann_zeta(2.0) - pi * pi / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0) - pi.powi(4) / 90.0).abs() < 1e-12);
        // ζ(1.01) = 100.5779433...
        assert!((riemann_zeta(1.01) - 100.577_943_338_497).abs() < 1e-8);
    }

    #[test]
    fn inverse_cdf_sampling() {
        let lw = [0.25f64.ln(), 0.5f64.ln(), 0.25f64.ln()];
        assert_eq!(sample_log_weights(&lw, 0.0), 0);
        assert_eq!(sample_log_weights(&lw, 0.3), 1);
        assert_eq!(sample_log_weights(&lw, 0.8), 2);
        assert_eq!(sample_log_weights(&lw, 0.999_999_999_999), 2);
    }
}
