//! Standard normal helpers and log-densities of the prior factors.

use libm::{erfc, lgamma};
use std::f64::consts::FRAC_1_SQRT_2;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal cdf through the complementary error function, accurate in both tails.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(z)` without cancellation.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

// Acklam's rational approximation, relative error about 1e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

fn acklam_lower(u: f64) -> f64 {
    if u < 0.024_25 {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of the standard normal cdf for `u` in (0, 1).
pub fn std_normal_quantile(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    if u > 0.5 {
        return -std_normal_quantile(1.0 - u);
    }
    let mut z = acklam_lower(u);
    // Halley steps against the lower tail, where the cdf has full relative precision
    for _ in 0..2 {
        let e = std_normal_cdf(z) - u;
        let d = e * (0.5 * z * z + LN_SQRT_2PI).exp();
        let next = z - d / (1.0 + 0.5 * z * d);
        if !next.is_finite() || next == z {
            break;
        }
        z = next;
    }
    z
}

/// ln of the gamma density with shape `k` and rate `rate` at `x > 0`.
pub fn ln_gamma_pdf(x: f64, k: f64, rate: f64) -> f64 {
    k * rate.ln() - lgamma(k) + (k - 1.0) * x.ln() - rate * x
}

/// ln of the inverse-gamma density with shape `a` and scale `b` at `x > 0`.
pub fn ln_inv_gamma_pdf(x: f64, a: f64, b: f64) -> f64 {
    a * b.ln() - lgamma(a) - (a + 1.0) * x.ln() - b / x
}

/// `ln B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// ln of the symmetric beta density B(p; a) = p^(a-1)(1-p)^(a-1) / B(a, a).
pub fn ln_sym_beta_pdf(p: f64, a: f64) -> f64 {
    (a - 1.0) * (p.ln() + (1.0 - p).ln()) - ln_beta(a, a)
}

/// Linear-interpolation quantile of an ascending slice at level `q` in [0, 1].
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}
