//! Special functions used by the rate formulas.

use crate::error::{Error, Result};

/// `(x)_m = x (x-1) ⋯ (x-m+1)`, with `(x)_0 = 1`.
pub fn falling_factorial(x: f64, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (x - i as f64))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Complete Beta function `B(a, b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as a float; exact for the sizes used here.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Lower incomplete Beta function `B(p, a, b) = ∫_0^p t^{a-1} (1-t)^{b-1} dt`.
///
/// Uses the continued fraction for the regularized function on whichever
/// side of the mode it converges fastest.
pub fn incomplete_beta(p: f64, a: f64, b: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("incomplete beta needs 0 < p ≤ 1, got {p}")));
    }
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!(
            "incomplete beta needs positive shapes, got a={a}, b={b}"
        )));
    }
    let complete = beta(a, b);
    if p == 1.0 {
        return Ok(complete);
    }
    let value = if p < (a + 1.0) / (a + b + 2.0) {
        lower_by_fraction(p, a, b)
    } else {
        complete - lower_by_fraction(1.0 - p, b, a)
    };
    Ok(value.max(0.0))
}

/// `x^a (1-x)^b / a · CF(x; a, b)`, the unregularized lower tail.
fn lower_by_fraction(x: f64, a: f64, b: f64) -> f64 {
    let log_front = a * x.ln() + b * (-x).ln_1p();
    log_front.exp() / a * beta_fraction(x, a, b)
}

/// Modified Lentz evaluation of the incomplete-Beta continued fraction.
fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const TOL: f64 = 1e-16;
    const MAX_TERMS: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let step = d * c;
        h *= step;
        if (step - 1.0).abs() < TOL {
            break;
        }
    }
    h
}
