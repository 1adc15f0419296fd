//! Trigonometric orthonormal basis of `L₂[0,1]`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Result};

/// Evaluate `φ_i(t)`: `φ_1 ≡ 1`, `φ_{2k}(t) = √2 cos(2kπt)`,
/// `φ_{2k+1}(t) = √2 sin(2kπt)`.
pub fn trig_basis_eval(i: usize, t: f64) -> Result<f64> {
    if i == 0 {
        return Err(invalid("i", "basis index starts at 1"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", format!("{t} is outside [0, 1]")));
    }
    Ok(phi(i, t))
}

/// Unchecked evaluation; callers guarantee `i ≥ 1`.
#[inline]
pub(crate) fn phi(i: usize, t: f64) -> f64 {
    if i == 1 {
        return 1.0;
    }
    let k = (i / 2) as f64;
    let arg = 2.0 * k * PI * t;
    if i.is_multiple_of(2) {
        SQRT_2 * arg.cos()
    } else {
        SQRT_2 * arg.sin()
    }
}
