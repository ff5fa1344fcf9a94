//! Brute-force oracles shared by the property and acceptance suites.
#![allow(dead_code)]

/// Least-squares fit over every partition of the index range into
/// contiguous blocks whose weighted means satisfy `ok`.
fn best_block_fit(values: &[f64], weights: &[f64], ok: &dyn Fn(&[f64]) -> bool) -> Vec<f64> {
    let n = values.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        let mut fit = vec![0.0; n];
        let mut start = 0;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let w: f64 = weights[start..end].iter().sum();
                let m = values[start..end].iter().zip(&weights[start..end]).map(|(v, w)| v * w).sum::<f64>() / w;
                fit[start..end].iter_mut().for_each(|f| *f = m);
                start = end;
            }
        }
        if !ok(&fit) {
            continue;
        }
        let sse: f64 = fit.iter().zip(values).zip(weights).map(|((f, v), w)| w * (f - v) * (f - v)).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b - 1e-15) {
            best = Some((sse, fit));
        }
    }
    best.expect("a single block is always feasible").1
}

pub fn brute_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    best_block_fit(values, weights, &|f| f.windows(2).all(|w| w[0] <= w[1] + 1e-12))
}

pub fn brute_unimodal(values: &[f64], weights: &[f64], mode: usize) -> Vec<f64> {
    best_block_fit(values, weights, &|f| {
        f[..=mode].windows(2).all(|w| w[0] <= w[1] + 1e-12) && f[mode..].windows(2).all(|w| w[0] >= w[1] - 1e-12)
    })
}

pub fn sse(values: &[f64], weights: &[f64], fit: &[f64]) -> f64 {
    fit.iter().zip(values).zip(weights).map(|((f, v), w)| w * (f - v) * (f - v)).sum()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, 1e-14, 48)
}

/// `Pr(X > t)` for `X ~ Beta(a, b)` by adaptive quadrature of the
/// unnormalized density, with `a, b >= 1`.
pub fn beta_tail_quadrature(a: f64, b: f64, t: f64) -> f64 {
    // scale by the density at its mode to keep magnitudes near one
    let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
    let log_peak = (a - 1.0) * mode.max(1e-300).ln() + (b - 1.0) * (1.0 - mode).max(1e-300).ln();
    let f = move |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            let edge = if x <= 0.0 { a == 1.0 } else { b == 1.0 };
            return if edge { (-log_peak).exp() } else { 0.0 };
        }
        ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - log_peak).exp()
    };
    // split at the mode so each piece is monotone
    let total = integrate(&f, 0.0, mode) + integrate(&f, mode, 1.0);
    let upper = if t >= mode {
        integrate(&f, t, 1.0)
    } else {
        integrate(&f, t, mode) + integrate(&f, mode, 1.0)
    };
    upper / total
}

/// Root of `g` on `[lo, hi]` by bisection, `g(lo)` and `g(hi)` of opposite sign.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let s = g(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid).signum() == s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
