//! Linear regression `y = beta . phi(x) + eps` with asymmetric-normal noise
//! `eps ~ N_a(0, sigma^2, p)`, and the replicated simulation study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dist::{AsymmetricDensity, AsymmetricNormal, Symmetry};
use crate::error::{Error, Result};
use crate::estimation::{
    fit_normal_fixed_mu, hill_climb, log_likelihood, HillClimbConfig, SampleSet,
};
use crate::special::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMap {
    /// `phi(x) = [x, 1]`.
    #[default]
    Linear,
}

impl FeatureMap {
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Linear => 2,
        }
    }
}

/// Coefficients `beta = [slope, intercept]` and zero-split noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub beta: Vec<f64>,
    pub noise: AsymmetricNormal,
    pub feature_map: FeatureMap,
}

impl RegressionModel {
    pub fn new(beta: Vec<f64>, noise: AsymmetricNormal) -> Result<Self> {
        let feature_map = FeatureMap::Linear;
        if beta.len() != feature_map.dim() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::domain("beta must hold two finite coefficients"));
        }
        if noise.mu() != 0.0 {
            return Err(Error::domain("noise split must be 0"));
        }
        Ok(Self {
            beta,
            noise,
            feature_map,
        })
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.beta[0] * x + self.beta[1]
    }

    pub fn residuals(&self, data: &[(f64, f64)]) -> Vec<f64> {
        data.iter().map(|&(x, y)| y - self.predict(x)).collect()
    }

    pub fn log_likelihood(&self, data: &[(f64, f64)]) -> f64 {
        residual_ll(&self.residuals(data), &self.noise)
    }
}

fn residual_ll(res: &[f64], noise: &AsymmetricNormal) -> f64 {
    match SampleSet::new(res.to_vec()) {
        Ok(s) => log_likelihood(noise, &s),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Draws `y_i = beta . phi(x_i) + eps_i` with `eps_i ~ N_a(0, sigma^2, p)`.
pub fn simulate<R: Rng + ?Sized>(
    beta: &[f64],
    sigma: f64,
    p: f64,
    xs: &[f64],
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    let noise = AsymmetricNormal::new(0.0, sigma, p)?;
    let model = RegressionModel::new(beta.to_vec(), noise)?;
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("x values must be finite"));
    }
    let eps = noise.sample(rng, xs.len());
    Ok(xs
        .iter()
        .zip(eps)
        .map(|(&x, e)| (x, model.predict(x) + e))
        .collect())
}

/// `n` equidistant points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Weighted least squares for `phi(x) = [x, 1]` in centred form.
fn weighted_line(data: &[(f64, f64)], w: &[f64]) -> Result<[f64; 2]> {
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::SingularDesign);
    }
    let xbar = data.iter().zip(w).map(|(d, w)| w * d.0).sum::<f64>() / sw;
    let ybar = data.iter().zip(w).map(|(d, w)| w * d.1).sum::<f64>() / sw;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&(x, y), &wi) in data.iter().zip(w) {
        let dx = x - xbar;
        sxx += wi * dx * dx;
        sxy += wi * dx * (y - ybar);
    }
    let scale: f64 = data.iter().zip(w).map(|(d, w)| w * d.0 * d.0).sum();
    if !(sxx > 1e-14 * scale) {
        return Err(Error::SingularDesign);
    }
    let slope = sxy / sxx;
    Ok([slope, ybar - slope * xbar])
}

fn check_design(data: &[(f64, f64)]) -> Result<()> {
    if data.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::domain("data must be finite"));
    }
    let mut xs: Vec<f64> = data.iter().map(|d| d.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let needed = FeatureMap::Linear.dim() + 1;
    match xs.len() {
        n if n < 2 => Err(Error::SingularDesign),
        n if n < needed => Err(Error::InsufficientData { needed, got: n }),
        _ => Ok(()),
    }
}

/// Outcome of a regression fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub model: RegressionModel,
    pub log_likelihood: f64,
    /// Alternation rounds performed (0 for the symmetric family).
    pub rounds: usize,
    pub converged: bool,
    /// Log-likelihood after the initial fit and after every round.
    pub trace: Vec<f64>,
}

/// Relative tolerance on the per-round log-likelihood change.
pub const ALTERNATION_TOLERANCE: f64 = 1e-8;
pub const MAX_ROUNDS: usize = 500;

pub fn fit(data: &[(f64, f64)], family: Symmetry) -> Result<RegressionFit> {
    let sym = fit_symmetric(data)?;
    match family {
        Symmetry::Symmetric => Ok(sym),
        Symmetry::Asymmetric => fit_asymmetric_from(data, sym),
    }
}

fn fit_symmetric(data: &[(f64, f64)]) -> Result<RegressionFit> {
    check_design(data)?;
    let beta = weighted_line(data, &vec![1.0; data.len()])?;
    let res: Vec<f64> = data
        .iter()
        .map(|&(x, y)| y - (beta[0] * x + beta[1]))
        .collect();
    let rss: f64 = res.iter().map(|r| r * r).sum();
    // exact fits keep the smallest representable scale
    let sigma = (rss / data.len() as f64).sqrt().max(f64::MIN_POSITIVE);
    let model = RegressionModel::new(beta.to_vec(), AsymmetricNormal::symmetric(0.0, sigma)?)?;
    let ll = residual_ll(&res, &model.noise);
    Ok(RegressionFit {
        model,
        log_likelihood: ll,
        rounds: 0,
        converged: true,
        trace: vec![ll],
    })
}

/// Side-weighted quadratic loss `sum w(r) r^2` with `w = a2` for `r >= 0`, `1 / a2` otherwise.
fn asym_loss(data: &[(f64, f64)], beta: [f64; 2], a2: f64) -> f64 {
    data.iter()
        .map(|&(x, y)| {
            let r = y - (beta[0] * x + beta[1]);
            if r >= 0.0 {
                a2 * r * r
            } else {
                r * r / a2
            }
        })
        .sum()
}

/// Minimises the side-weighted loss by reweighted least squares with a
/// backtracking guard, so the loss never increases.
fn irls_beta(data: &[(f64, f64)], start: [f64; 2], a2: f64) -> Result<[f64; 2]> {
    let mut beta = start;
    let mut loss = asym_loss(data, beta, a2);
    let mut w = vec![0.0; data.len()];
    for _ in 0..100 {
        for (wi, &(x, y)) in w.iter_mut().zip(data) {
            *wi = if y - (beta[0] * x + beta[1]) >= 0.0 {
                a2
            } else {
                1.0 / a2
            };
        }
        let target = weighted_line(data, &w)?;
        let dir = [target[0] - beta[0], target[1] - beta[1]];
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = [beta[0] + t * dir[0], beta[1] + t * dir[1]];
            let l = asym_loss(data, cand, a2);
            if l < loss {
                beta = cand;
                loss = l;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok(beta)
}

fn fit_asymmetric_from(data: &[(f64, f64)], sym: RegressionFit) -> Result<RegressionFit> {
    let cfg = HillClimbConfig::default();
    let mut beta = [sym.model.beta[0], sym.model.beta[1]];
    let mut noise = sym.model.noise;
    let mut ll = sym.log_likelihood;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut rounds = 0;
    while rounds < MAX_ROUNDS {
        rounds += 1;
        let a2 = noise.p() / (1.0 - noise.p());
        let next_beta = irls_beta(data, beta, a2)?;
        let res: Vec<f64> = data
            .iter()
            .map(|&(x, y)| y - (next_beta[0] * x + next_beta[1]))
            .collect();
        let Ok(samples) = SampleSet::new(res) else {
            break;
        };
        // the climb restarts at 0.5; the current p, with sigma refitted, is the fallback
        let climbed = hill_climb(0.5, &cfg, |p| fit_normal_fixed_mu(&samples, 0.0, p));
        let best = match (climbed, fit_normal_fixed_mu(&samples, 0.0, noise.p())) {
            (Ok(o), Ok(stay)) => {
                if o.fit.log_likelihood >= stay.log_likelihood {
                    o.fit
                } else {
                    stay
                }
            }
            (Err(Error::ConvergenceFailure { best, .. }), Ok(stay)) => {
                if best.log_likelihood >= stay.log_likelihood {
                    *best
                } else {
                    stay
                }
            }
            // zero residual spread: the current model is already exact
            (Err(Error::DegenerateScale(_)), _) | (_, Err(Error::DegenerateScale(_))) => {
                beta = next_beta;
                converged = true;
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let next_noise = *best
            .dist
            .as_normal()
            .ok_or_else(|| Error::InvariantViolation("expected normal fit".into()))?;
        let next_ll = best.log_likelihood;
        if next_ll < ll {
            // the hill-climb includes the current p, so this only happens through rounding
            converged = true;
            break;
        }
        let change = (next_ll - ll).abs() / ll.abs().max(1.0);
        beta = next_beta;
        noise = next_noise;
        ll = next_ll;
        trace.push(ll);
        if change < ALTERNATION_TOLERANCE {
            converged = true;
            break;
        }
    }
    let model = RegressionModel::new(beta.to_vec(), noise)?;
    let log_likelihood = model.log_likelihood(data);
    Ok(RegressionFit {
        model,
        log_likelihood,
        rounds,
        converged,
        trace,
    })
}

/// Parameters of the replicated study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub p_values: Vec<f64>,
    pub runs: usize,
    pub sigma: f64,
    pub n_points: usize,
    pub seed: u64,
}

impl StudyConfig {
    pub fn new(p_values: Vec<f64>, runs: usize, seed: u64) -> Self {
        Self {
            p_values,
            runs,
            sigma: 0.1,
            n_points: 101,
            seed,
        }
    }
}

/// The default grid `p in {0.1, ..., 0.9}`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub p_true: f64,
    pub run: usize,
    pub ll_sym: f64,
    pub ll_asym: f64,
    pub p_hat: f64,
    pub beta_true: [f64; 2],
    pub beta_hat: [f64; 2],
}

/// Per-`p` aggregates; intervals are 2.5 / 97.5 percentiles of the runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub p_true: f64,
    pub runs: usize,
    pub mean_p_hat: f64,
    pub p_hat_interval: [f64; 2],
    pub mean_ll_sym: f64,
    pub ll_sym_interval: [f64; 2],
    pub mean_ll_asym: f64,
    pub ll_asym_interval: [f64; 2],
    pub asym_ge_sym_fraction: f64,
    pub interval_kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
}

/// Independent generator for run `run` of grid point `index`.
pub fn run_rng(seed: u64, index: usize, run: usize, runs: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index * runs + run) as u64);
    rng
}

fn study_run(cfg: &StudyConfig, index: usize, run: usize) -> Result<StudyRow> {
    let p_true = cfg.p_values[index];
    let mut rng = run_rng(cfg.seed, index, run, cfg.runs);
    let beta_true = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
    let xs = linspace(-1.0, 1.0, cfg.n_points);
    let data = simulate(&beta_true, cfg.sigma, p_true, &xs, &mut rng)?;
    let sym = fit(&data, Symmetry::Symmetric)?;
    let asym = fit_asymmetric_from(&data, sym.clone())?;
    Ok(StudyRow {
        p_true,
        run,
        ll_sym: sym.log_likelihood,
        ll_asym: asym.log_likelihood,
        p_hat: asym.model.noise.p(),
        beta_true,
        beta_hat: [asym.model.beta[0], asym.model.beta[1]],
    })
}

/// Runs every `(p, run)` pair in parallel; rows come back in grid order.
pub fn replicate_study(cfg: &StudyConfig) -> Result<StudyReport> {
    if cfg.runs == 0 {
        return Err(Error::Validation("runs must be at least 1".into()));
    }
    if cfg.p_values.is_empty() {
        return Err(Error::Validation("p grid is empty".into()));
    }
    for &p in &cfg.p_values {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Validation(format!(
                "p values must lie in (0, 1), got {p}"
            )));
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.p_values.len())
        .flat_map(|i| (0..cfg.runs).map(move |r| (i, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(i, r)| study_run(cfg, i, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(StudyReport {
        config: cfg.clone(),
        rows,
    })
}

fn mean_and_interval(mut v: Vec<f64>) -> (f64, [f64; 2]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.sort_by(f64::total_cmp);
    (
        mean,
        [quantile_sorted(&v, 0.025), quantile_sorted(&v, 0.975)],
    )
}

impl StudyReport {
    pub fn summary(&self) -> Vec<StudySummary> {
        self.config
            .p_values
            .iter()
            .map(|&p| {
                let rows: Vec<&StudyRow> = self.rows.iter().filter(|r| r.p_true == p).collect();
                let (mean_p_hat, p_hat_interval) =
                    mean_and_interval(rows.iter().map(|r| r.p_hat).collect());
                let (mean_ll_sym, ll_sym_interval) =
                    mean_and_interval(rows.iter().map(|r| r.ll_sym).collect());
                let (mean_ll_asym, ll_asym_interval) =
                    mean_and_interval(rows.iter().map(|r| r.ll_asym).collect());
                let ge = rows.iter().filter(|r| r.ll_asym >= r.ll_sym).count();
                StudySummary {
                    p_true: p,
                    runs: rows.len(),
                    mean_p_hat,
                    p_hat_interval,
                    mean_ll_sym,
                    ll_sym_interval,
                    mean_ll_asym,
                    ll_asym_interval,
                    asym_ge_sym_fraction: ge as f64 / rows.len() as f64,
                    interval_kind: "percentile 2.5/97.5".into(),
                }
            })
            .collect()
    }

    /// CSV with header `p_true,run,ll_sym,ll_asym,p_hat`, full precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["p_true", "run", "ll_sym", "ll_asym", "p_hat"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.p_true.to_string(),
                r.run.to_string(),
                r.ll_sym.to_string(),
                r.ll_asym.to_string(),
                r.p_hat.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}
