//! Cutoff profiles, small polynomial helpers and cached Gauss-Legendre rules.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Coefficients of the quintic smoothstep `10t^3 - 15t^4 + 6t^5`.
pub const SMOOTHSTEP: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

/// Quintic smoothstep clamped to [0, 1], with first and second derivatives.
pub fn smoothstep(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0, 0.0)
    } else {
        let t2 = t * t;
        (
            t2 * t * (10.0 + t * (-15.0 + 6.0 * t)),
            30.0 * t2 * (1.0 - t) * (1.0 - t),
            60.0 * t * (1.0 - t) * (1.0 - 2.0 * t),
        )
    }
}

/// Even plateau profile: 1 for `|s| <= inner`, 0 for `|s| >= outer`, C^2 in between.
/// Returns value and derivatives with respect to `s`.
pub fn plateau(s: f64, inner: f64, outer: f64) -> (f64, f64, f64) {
    let a = s.abs();
    let w = outer - inner;
    let (v, d1, d2) = smoothstep((outer - a) / w);
    let sg = if s < 0.0 { -1.0 } else { 1.0 };
    (v, -sg * d1 / w, d2 / (w * w))
}

pub fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

pub fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| k as f64 * a)
        .collect()
}

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

/// Divided difference `(q(s) - q(t)) / (s - t)` without cancellation.
pub fn poly_divided_difference(q: &[f64], s: f64, t: f64) -> f64 {
    let n = q.len();
    if n < 2 {
        return 0.0;
    }
    // Synthetic division of q by (x - t); the quotient evaluated at s.
    let mut b = vec![0.0; n - 1];
    b[n - 2] = q[n - 1];
    for k in (1..n - 1).rev() {
        b[k - 1] = q[k] + t * b[k];
    }
    poly_eval(&b, s)
}

/// `x^p` for `x >= 0`, with exact fast paths for the common exponents.
#[inline]
pub fn pow_p(x: f64, p: f64) -> f64 {
    if p == 4.0 {
        let s = x * x;
        s * s
    } else if p == 3.0 {
        x * x * x
    } else if p == 2.5 {
        x * x * x.sqrt()
    } else {
        x.powf(p)
    }
}

const RULE_SIZES: [usize; 9] = [2, 3, 4, 5, 6, 8, 10, 16, 32];

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static RULES: [OnceLock<Vec<(f64, f64)>>; 9] = [const { OnceLock::new() }; 9];
    let idx = RULE_SIZES
        .iter()
        .position(|&m| m == n)
        .unwrap_or_else(|| panic!("unsupported Gauss-Legendre order {n}"));
    RULES[idx].get_or_init(|| {
        GaussLegendre::new(NonZeroUsize::new(n).expect("nonzero"))
            .as_node_weight_pairs()
            .to_vec()
    })
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gl_integrate(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    gauss_legendre(n)
        .iter()
        .map(|&(x, w)| w * f(m + h * x))
        .sum::<f64>()
        * h
}
