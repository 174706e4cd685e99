//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's quadrature, root finders or optimizers.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `∫ f dσ` for the semicircle via `x = 2 cos φ` and the midpoint rule,
/// which converges spectrally for smooth `f`.
pub fn semicircle_integral<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    let h = PI / n as f64;
    (0..n)
        .map(|i| {
            let phi = (i as f64 + 0.5) * h;
            f(2.0 * phi.cos()) * (2.0 / PI) * phi.sin().powi(2) * h
        })
        .sum()
}

/// `∫ f dπ_α` for Marchenko–Pastur with `α ≤ 1` via
/// `x = 1 + α + 2√α cos φ`, where `dπ_α = 2 sin²φ / (π x) dφ`.
pub fn mp_integral<F: Fn(f64) -> f64>(alpha: f64, f: F, n: usize) -> f64 {
    let h = PI / n as f64;
    let r = alpha.sqrt();
    (0..n)
        .map(|i| {
            let phi = (i as f64 + 0.5) * h;
            let x = 1.0 + alpha + 2.0 * r * phi.cos();
            f(x) * 2.0 * phi.sin().powi(2) / (PI * x) * h
        })
        .sum()
}

/// Plain bisection on a sign change, 200 halvings.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let up = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximum of `f` on a uniform grid of `[lo, hi]` refined three times
/// around the best node.
pub fn grid_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, n: usize) -> (f64, f64) {
    let mut best = (lo, f64::NEG_INFINITY);
    for _ in 0..4 {
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let x = lo + h * i as f64;
            let v = f(x);
            if v > best.1 {
                best = (x, v);
            }
        }
        lo = best.0 - h;
        hi = best.0 + h;
    }
    best
}

/// `J` from the rank-one formula with user-supplied `G`, `G^{-1}` and
/// log-potential, written out independently of the library's case split.
pub fn j_formula(theta: f64, lambda: f64, g: impl Fn(f64) -> f64, g_inv: impl Fn(f64) -> f64, logpot: impl Fn(f64) -> f64) -> f64 {
    let v = if g(lambda) <= theta { lambda } else { g_inv(theta) };
    theta * lambda + (v - lambda) * g(v) - theta.ln() - logpot(v) - 1.0
}

/// Semicircle closed forms used by several tests.
pub fn sc_g(z: f64) -> f64 {
    (z - (z * z - 4.0).sqrt()) / 2.0
}

pub fn sc_logpot(v: f64) -> f64 {
    let t = v.abs();
    let a = t * (t * t - 4.0).sqrt() / 2.0 - 2.0 * ((t + (t * t - 4.0).sqrt()) / 2.0).ln();
    v * v / 4.0 - 0.5 - a / 2.0
}

/// `∫_2^x sqrt(t² - 4) dt`.
pub fn wigner_area(x: f64) -> f64 {
    x * (x * x - 4.0).sqrt() / 2.0 - 2.0 * ((x + (x * x - 4.0).sqrt()) / 2.0).ln()
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
