//! Independent numerical oracles for the `asymdist` test suites.
//!
//! Nothing here depends on the library under test. Every routine is a
//! textbook method (adaptive Gauss-Kronrod quadrature, Kolmogorov-Smirnov
//! statistics, exhaustive path enumeration) so that expected values can be
//! computed by a route that shares no code with the implementation.

pub mod hmm;
pub mod ks;
pub mod quad;

/// Nats-based entropy of a Bernoulli(p) variable.
pub fn bernoulli_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > 0.0 {
            h -= q * q.ln();
        }
    }
    h
}

/// KL divergence KL(Be(a) || Be(b)) in nats.
pub fn bernoulli_kl(a: f64, b: f64) -> f64 {
    let mut d = 0.0;
    if a > 0.0 {
        d += a * (a / b).ln();
    }
    if a < 1.0 {
        d += (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
    }
    d
}

/// Linear-interpolated empirical quantile of already sorted data.
pub fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
