//! Kolmogorov-Smirnov statistics and asymptotic critical values.

/// Asymptotic coefficient c(alpha) for alpha = 0.01.
pub const C_ALPHA_01: f64 = 1.627_61;

/// One-sample KS statistic of `samples` against `cdf`.
pub fn one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// One-sample critical value at the 1% level.
pub fn one_sample_critical_01(n: usize) -> f64 {
    C_ALPHA_01 / (n as f64).sqrt()
}

/// Two-sample KS statistic.
pub fn two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Two-sample critical value at the 1% level.
pub fn two_sample_critical_01(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    C_ALPHA_01 * ((n + m) / (n * m)).sqrt()
}
