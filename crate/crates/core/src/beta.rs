//! Regularized incomplete beta function.

use libm::{exp, lgamma, log, log1p};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// `I_x(a, b)` for `a, b > 0` and `x` in `[0, 1]`, evaluated with the
/// continued fraction on whichever side of the mean converges faster.
/// Non-integer shapes are fine.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - cf_side(b, a, 1.0 - x)
    } else {
        cf_side(a, b, x)
    }
}

fn cf_side(a: f64, b: f64, x: f64) -> f64 {
    let ln_front = a * log(x) + b * log1p(-x) - ln_beta(a, b);
    exp(ln_front) / a * continued_fraction(a, b, x)
}

// Modified Lentz evaluation of the standard even/odd continued fraction.
fn continued_fraction(a: f64, b: f64, x: f64) -> f64 {
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
    for m in 1..=MAX_ITER {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
