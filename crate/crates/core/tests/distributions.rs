use asymdist::{AsymmetricDensity, AsymmetricLaplace, AsymmetricNormal};
use asymdist_oracle::{ks, quad};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const SCALES: [f64; 3] = [0.1, 1.0, 10.0];
const WEIGHTS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];
const LOCATIONS: [f64; 3] = [-3.0, 0.0, 7.0];

fn laplace_grid() -> Vec<AsymmetricLaplace> {
    let mut out = Vec::new();
    for &l in &SCALES {
        for &p in &WEIGHTS {
            for &mu in &LOCATIONS {
                out.push(AsymmetricLaplace::new(mu, l, p).unwrap());
            }
        }
    }
    out
}

fn normal_grid() -> Vec<AsymmetricNormal> {
    let mut out = Vec::new();
    for &s in &SCALES {
        for &p in &WEIGHTS {
            for &mu in &LOCATIONS {
                out.push(AsymmetricNormal::new(mu, s, p).unwrap());
            }
        }
    }
    out
}

fn laplace_sides(d: &AsymmetricLaplace) -> (f64, f64) {
    (1.0 / d.left_rate(), 1.0 / d.right_rate())
}

fn normal_sides(d: &AsymmetricNormal) -> (f64, f64) {
    (d.left_sd(), d.right_sd())
}

fn check_mass<D: AsymmetricDensity + std::fmt::Debug>(d: &D, sides: (f64, f64)) {
    let f = |x: f64| d.pdf(x).unwrap();
    let left = quad::integrate_lower(f, d.mu(), sides.0, 1e-13);
    let right = quad::integrate_upper(f, d.mu(), sides.1, 1e-13);
    assert!((left - d.p()).abs() < 1e-9, "{d:?}: left mass {left}");
    assert!(
        (left + right - 1.0).abs() < 1e-9,
        "{d:?}: volume {}",
        left + right
    );
}

#[test]
fn unit_volume_and_left_weight() {
    for d in laplace_grid() {
        check_mass(&d, laplace_sides(&d));
    }
    for d in normal_grid() {
        check_mass(&d, normal_sides(&d));
    }
}

fn check_continuity<D: AsymmetricDensity + std::fmt::Debug>(d: &D) {
    let eps = 1e-8;
    let l = d.pdf(d.mu() - eps).unwrap();
    let r = d.pdf(d.mu() + eps).unwrap();
    let at = d.pdf(d.mu()).unwrap();
    assert!((l - r).abs() <= 1e-6 * at, "{d:?}: {l} vs {r}");
}

#[test]
fn continuous_at_split() {
    for d in laplace_grid() {
        check_continuity(&d);
        assert!((d.pdf(d.mu()).unwrap() - d.beta()).abs() <= 1e-12 * d.beta());
    }
    for d in normal_grid() {
        check_continuity(&d);
        let want = d.beta() / (2.0 * PI).sqrt();
        assert!((d.pdf(d.mu()).unwrap() - want).abs() <= 1e-12 * want);
    }
}

fn offsets(scale: f64) -> impl Iterator<Item = f64> {
    (-40..=40).map(move |i| i as f64 * 0.1 * scale)
}

#[test]
fn symmetric_reduction() {
    for d in laplace_grid().into_iter().filter(|d| d.p() == 0.5) {
        let l = d.lambda();
        for dx in offsets(1.0 / l) {
            let want = 0.5 * l * (-l * dx.abs()).exp();
            let got = d.pdf(d.mu() + dx).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "{d:?} at {dx}");
        }
    }
    for d in normal_grid().into_iter().filter(|d| d.p() == 0.5) {
        let s = d.sigma();
        for dx in offsets(s) {
            let want = (-0.5 * (dx / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
            let got = d.pdf(d.mu() + dx).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "{d:?} at {dx}");
        }
    }
}

fn laplace_base(x: f64, mu: f64, rate: f64) -> f64 {
    0.5 * rate * (-rate * (x - mu).abs()).exp()
}

fn normal_base(x: f64, mu: f64, sd: f64) -> f64 {
    (-0.5 * ((x - mu) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt())
}

#[test]
fn mixture_identity() {
    let z = 0.5;
    for d in laplace_grid() {
        let (ls, rs) = laplace_sides(&d);
        for dx in offsets(ls.max(rs)) {
            let x = d.mu() + dx;
            let (il, ir) = if x < d.mu() { (1.0, 0.0) } else { (0.0, 1.0) };
            let want = d.p() * il * laplace_base(x, d.mu(), 1.0 / ls)
                + (1.0 - d.p()) * ir * laplace_base(x, d.mu(), 1.0 / rs);
            let got = d.pdf(x).unwrap() * z;
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1e-300),
                "{d:?} at {x}"
            );
        }
    }
    for d in normal_grid() {
        let (ls, rs) = normal_sides(&d);
        for dx in offsets(ls.max(rs)) {
            let x = d.mu() + dx;
            let (il, ir) = if x < d.mu() { (1.0, 0.0) } else { (0.0, 1.0) };
            let want = d.p() * il * normal_base(x, d.mu(), ls)
                + (1.0 - d.p()) * ir * normal_base(x, d.mu(), rs);
            let got = d.pdf(x).unwrap() * z;
            assert!(
                (got - want).abs() <= 1e-12 * want.max(1e-300),
                "{d:?} at {x}"
            );
        }
    }
}

#[test]
fn laplace_beta_matches_unit_volume() {
    let d = AsymmetricLaplace::new(0.0, 1.0, 0.8).unwrap();
    assert!((d.pdf(0.0).unwrap() - 0.4).abs() < 1e-15);
    let unit = quad::integrate_real(|x| d.pdf(x).unwrap() / d.beta(), 0.0, 1.0, 1e-13);
    assert!((0.4 * unit - 1.0).abs() < 1e-10);
}

#[test]
fn cdf_matches_quadrature() {
    let d = AsymmetricNormal::new(0.0, 1.0, 0.8).unwrap();
    let q = quad::integrate_lower(|x| d.pdf(x).unwrap(), -1.0, d.left_sd(), 1e-13);
    assert!((d.cdf(-1.0).unwrap() - q).abs() < 1e-9);
    for d in normal_grid().into_iter().step_by(4) {
        for dx in [-2.0, -0.5, 0.3, 1.7] {
            let x = d.mu() + dx * d.sigma();
            let q = quad::integrate_lower(
                |t| d.pdf(t).unwrap(),
                x,
                d.left_sd().max(d.right_sd()),
                1e-13,
            );
            assert!((d.cdf(x).unwrap() - q).abs() < 1e-9, "{d:?} at {x}");
        }
    }
    for d in laplace_grid().into_iter().step_by(4) {
        for dx in [-2.0, -0.5, 0.3, 1.7] {
            let x = d.mu() + dx / d.lambda();
            let (ls, rs) = laplace_sides(&d);
            let q = quad::integrate_lower(|t| d.pdf(t).unwrap(), x, ls.max(rs), 1e-13);
            assert!((d.cdf(x).unwrap() - q).abs() < 1e-9, "{d:?} at {x}");
        }
    }
}

#[test]
fn log_pdf_far_in_the_tails() {
    let d = AsymmetricLaplace::new(0.0, 1.0, 0.5).unwrap();
    assert!((d.ln_pdf(1e6).unwrap() - (0.5f64.ln() - 1e6)).abs() < 1e-6);
    let n = AsymmetricNormal::new(0.0, 1.0, 0.9).unwrap();
    let x = -3.0;
    let sd = n.left_sd();
    let direct = 0.9 * 2.0 * normal_base(x, 0.0, sd);
    assert!((n.ln_pdf(x).unwrap() - direct.ln()).abs() < 1e-12);
    let far = n.ln_pdf(-1e6).unwrap();
    assert!(far.is_finite() && far < -5e10);
}

#[test]
fn cdf_limits() {
    let d = AsymmetricLaplace::new(0.0, 1.0, 0.5).unwrap();
    assert_eq!(d.cdf(1e3).unwrap(), 1.0);
    assert_eq!(d.cdf(-1e3).unwrap(), 0.0);
    let n = AsymmetricNormal::new(0.0, 1.0, 0.3).unwrap();
    assert_eq!(n.cdf(1e3).unwrap(), 1.0);
    assert_eq!(n.cdf(-1e3).unwrap(), 0.0);
}

#[test]
fn quantile_cdf_round_trip_on_wide_grid() {
    for d in laplace_grid() {
        let (ls, rs) = laplace_sides(&d);
        for dx in offsets(ls.max(rs) * 0.5) {
            let x = d.mu() + dx;
            let c = d.cdf(x).unwrap();
            if c <= 0.0 || c > 1.0 - 1e-6 {
                continue;
            }
            let back = d.quantile(c).unwrap();
            assert!(
                (back - x).abs() < 1e-8 * (1.0 + x.abs()),
                "{d:?} at {x}: {back}"
            );
        }
    }
    for d in normal_grid() {
        let (ls, rs) = normal_sides(&d);
        for dx in offsets(ls.max(rs) * 0.15) {
            let x = d.mu() + dx;
            let c = d.cdf(x).unwrap();
            if c <= 1e-300 || c > 1.0 - 1e-6 {
                continue;
            }
            let back = d.quantile(c).unwrap();
            assert!(
                (back - x).abs() < 1e-8 * (1.0 + x.abs()),
                "{d:?} at {x}: {back}"
            );
        }
    }
}

#[test]
fn quantile_examples() {
    let d = AsymmetricLaplace::new(0.0, 1.0, 0.5).unwrap();
    assert!((d.quantile(0.25).unwrap() - 0.5f64.ln()).abs() < 1e-12);
    let n = AsymmetricNormal::new(0.0, 1.0, 0.5).unwrap();
    assert!((n.quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
    for d in laplace_grid() {
        assert_eq!(d.quantile(d.p()).unwrap(), d.mu());
    }
    assert!(n.quantile(0.0).is_err() && n.quantile(1.0).is_err());
}

#[test]
fn sampling_left_fraction_and_ks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = AsymmetricNormal::new(0.0, 1.0, 0.8).unwrap();
    let xs = n.sample(&mut rng, 100_000);
    let frac = xs.iter().filter(|&&x| x < 0.0).count() as f64 / xs.len() as f64;
    assert!((0.796..=0.804).contains(&frac), "{frac}");
    let stat = ks::one_sample(&xs, |x| n.cdf(x).unwrap());
    assert!(stat < ks::one_sample_critical_01(xs.len()));

    let l = AsymmetricLaplace::new(0.0, 1.0, 0.5).unwrap();
    let ys = l.sample(&mut rng, 100_000);
    let stat = ks::one_sample(&ys, |x| l.cdf(x).unwrap());
    assert!(stat < ks::one_sample_critical_01(ys.len()), "{stat}");

    let skew = AsymmetricLaplace::new(2.0, 1.5, 0.2).unwrap();
    let zs = skew.sample(&mut rng, 50_000);
    let stat = ks::one_sample(&zs, |x| skew.cdf(x).unwrap());
    assert!(stat < ks::one_sample_critical_01(zs.len()), "{stat}");
    assert!(l.sample(&mut rng, 0).is_empty());
}

#[test]
fn exp_family_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    use rand::Rng;
    for _ in 0..1000 {
        let mu = rng.random_range(-5.0..5.0);
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let p = rng.random_range(0.02..0.98);
        let l = AsymmetricLaplace::new(mu, scale, p).unwrap();
        let n = AsymmetricNormal::new(mu, scale, p).unwrap();
        let x = mu + rng.random_range(-5.0..5.0) * scale.max(1.0 / scale);
        for (repr, pdf) in [
            (l.exp_family(), l.pdf(x).unwrap()),
            (n.exp_family(), n.pdf(x).unwrap()),
        ] {
            assert!(repr.natural_params.iter().all(|&e| e < 0.0));
            let t = repr.sufficient_stats(x);
            let rebuilt = (repr.log_base_measure(x)
                + repr.natural_params[0] * t[0]
                + repr.natural_params[1] * t[1]
                - repr.log_partition)
                .exp();
            assert!(
                (rebuilt - pdf).abs() <= 1e-12 * pdf.max(1e-300),
                "{repr:?} at {x}"
            );
        }
        assert!((l.exp_family().log_partition + l.beta().ln()).abs() < 1e-12);
        assert!((n.exp_family().log_partition + n.beta().ln()).abs() < 1e-12);
    }
}

#[test]
fn exp_family_examples() {
    let l = AsymmetricLaplace::new(0.0, 2.0, 0.8).unwrap();
    let eta = l.exp_family().natural_params;
    assert!((eta[0] + 4.0).abs() < 1e-12 && (eta[1] + 1.0).abs() < 1e-12);
    let n = AsymmetricNormal::new(0.0, 2.0, 0.5).unwrap();
    assert_eq!(n.exp_family().natural_params, [-0.125, -0.125]);
}

proptest! {
    #[test]
    fn cdf_is_monotone(mu in -10.0..10.0f64, scale in 0.05..20.0f64, p in 0.01..0.99f64,
                       a in -50.0..50.0f64, b in -50.0..50.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let l = AsymmetricLaplace::new(mu, scale, p).unwrap();
        prop_assert!(l.cdf(lo).unwrap() <= l.cdf(hi).unwrap());
        let n = AsymmetricNormal::new(mu, scale, p).unwrap();
        prop_assert!(n.cdf(lo).unwrap() <= n.cdf(hi).unwrap());
        prop_assert_eq!(n.cdf(mu).unwrap(), p);
        prop_assert_eq!(l.cdf(mu).unwrap(), p);
    }

    #[test]
    fn quantile_inverts_cdf(mu in -10.0..10.0f64, scale in 0.05..20.0f64, p in 0.01..0.99f64, q in 1e-6..(1.0 - 1e-6)) {
        let l = AsymmetricLaplace::new(mu, scale, p).unwrap();
        prop_assert!((l.cdf(l.quantile(q).unwrap()).unwrap() - q).abs() < 1e-10);
        let n = AsymmetricNormal::new(mu, scale, p).unwrap();
        prop_assert!((n.cdf(n.quantile(q).unwrap()).unwrap() - q).abs() < 1e-10);
    }

    #[test]
    fn same_seed_same_draws(seed in any::<u64>(), p in 0.01..0.99f64) {
        let n = AsymmetricNormal::new(0.0, 1.0, p).unwrap();
        let a = n.sample(&mut ChaCha8Rng::seed_from_u64(seed), 20);
        let b = n.sample(&mut ChaCha8Rng::seed_from_u64(seed), 20);
        prop_assert_eq!(a, b);
    }
}
