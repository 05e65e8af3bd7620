//! Mixture initialisation and Baum-Welch with the two-phase `p` schedule.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{AsymmetricDensity, AsymmetricNormal, Symmetry};
use crate::error::{Error, Result};
use crate::estimation::{fit_normal_fixed_p, hill_climb, FitResult, HillClimbConfig, SampleSet};

use super::inference::{e_step, EStep};
use super::{HmmModel, ObservationSeries};

/// Mixture EM iterations used for initialisation.
pub const MIXTURE_ITERS: usize = 100;
const MAX_RESEEDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Iteration cap, applied to each phase separately.
    pub max_iters: usize,
    /// Relative log-likelihood change counted as converged.
    pub tol: f64,
    /// Consecutive converged iterations needed to end a phase.
    pub patience: usize,
    /// Hill-climb settings for the per-state `p` search in phase 2.
    pub hill_climb: HillClimbConfig,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            tol: 1e-6,
            patience: 3,
            hill_climb: HillClimbConfig {
                tolerance: 1e-3,
                ..HillClimbConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmIteration {
    pub iteration: usize,
    /// 1 while `p` is held at 0.5, 2 once it is fitted.
    pub phase: u8,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub model: HmmModel,
    pub log_likelihood: f64,
    pub trace: Vec<EmIteration>,
    pub converged: bool,
}

/// Observed values sorted once, with the time step of each sorted entry.
struct SortedObs {
    values: Vec<f64>,
    time: Vec<usize>,
}

impl SortedObs {
    fn new(obs: &ObservationSeries) -> Self {
        let mut pairs: Vec<(f64, usize)> = obs
            .values()
            .iter()
            .enumerate()
            .filter_map(|(t, v)| v.map(|x| (x, t)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, time) = pairs.into_iter().unzip();
        Self { values, time }
    }
}

fn better(a: FitResult, b: FitResult) -> FitResult {
    if a.log_likelihood >= b.log_likelihood {
        a
    } else {
        b
    }
}

/// Weighted emission M-step. With a free `p` the hill-climb from 0.5 competes
/// with the closed-form fit at the current `p`, so the step never loses
/// expected likelihood. `None` means the weights cannot support a fit.
fn fit_emission(
    values: &[f64],
    weights: Vec<f64>,
    current: &AsymmetricNormal,
    free_p: bool,
    cfg: &HillClimbConfig,
) -> Option<AsymmetricNormal> {
    let samples = SampleSet::from_sorted_weighted(values.to_vec(), weights).ok()?;
    let fit = if free_p {
        let stay = fit_normal_fixed_p(&samples, current.p()).ok()?;
        match hill_climb(0.5, cfg, |p| fit_normal_fixed_p(&samples, p)) {
            Ok(o) => better(o.fit, stay),
            Err(Error::ConvergenceFailure { best, .. }) => better(*best, stay),
            Err(_) => stay,
        }
    } else {
        fit_normal_fixed_p(&samples, 0.5).ok()?
    };
    fit.dist.as_normal().copied()
}

fn m_step(
    model: &HmmModel,
    e: &EStep,
    sorted: &SortedObs,
    free_p: bool,
    cfg: &EmConfig,
) -> HmmModel {
    let k = model.k();
    let gamma = &e.summary.state_marginals;
    let pi = gamma[0].clone();
    let trans = (0..k)
        .map(|i| {
            let s: f64 = e.xi[i].iter().sum();
            if s > 0.0 && s.is_finite() {
                e.xi[i].iter().map(|x| x / s).collect()
            } else {
                model.trans()[i].clone()
            }
        })
        .collect();
    let emissions = (0..k)
        .map(|j| {
            let w = sorted.time.iter().map(|&t| gamma[t][j]).collect();
            let cur = &model.emissions()[j];
            fit_emission(&sorted.values, w, cur, free_p, &cfg.hill_climb).unwrap_or(*cur)
        })
        .collect();
    HmmModel {
        pi,
        trans,
        emissions,
    }
}

/// Baum-Welch. Phase 1 holds every `p` at 0.5 until the relative
/// log-likelihood change stays below `tol` for `patience` iterations; for the
/// asymmetric family phase 2 then fits `p` per state. Returns the best model
/// seen, which is the last one whenever the trace is monotone.
pub fn baum_welch(
    init: &HmmModel,
    obs: &ObservationSeries,
    family: Symmetry,
    cfg: &EmConfig,
) -> Result<EmFit> {
    if cfg.max_iters == 0 || !(cfg.tol > 0.0) || cfg.patience == 0 {
        return Err(Error::Validation(
            "EM needs max_iters >= 1, tol > 0 and patience >= 1".into(),
        ));
    }
    cfg.hill_climb.validate()?;
    let sorted = SortedObs::new(obs);
    let mut model = init.clone();
    let mut trace: Vec<EmIteration> = Vec::new();
    let mut best: Option<(f64, HmmModel)> = None;
    let mut phase = 1u8;
    let mut phase_iters = 0;
    let mut streak = 0;
    let mut prev: Option<f64> = None;
    let converged;
    let mut iteration = 0;
    loop {
        let e = e_step(&model, obs);
        let ll = e.summary.log_likelihood;
        if !ll.is_finite() {
            let dump: Vec<String> = trace
                .iter()
                .map(|s| format!("{}:{}", s.iteration, s.log_likelihood))
                .collect();
            return Err(Error::Numerics(format!(
                "non-finite log-likelihood at EM iteration {iteration} (trace {})",
                dump.join(", ")
            )));
        }
        trace.push(EmIteration {
            iteration,
            phase,
            log_likelihood: ll,
        });
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, model.clone()));
        }
        if let Some(p) = prev {
            if (ll - p).abs() <= cfg.tol * p.abs() {
                streak += 1;
            } else {
                streak = 0;
            }
        }
        prev = Some(ll);
        phase_iters += 1;
        let done = streak >= cfg.patience;
        if done || phase_iters >= cfg.max_iters {
            if phase == 1 && family == Symmetry::Asymmetric {
                phase = 2;
                phase_iters = 0;
                streak = 0;
            } else {
                converged = done;
                break;
            }
        }
        model = m_step(&model, &e, &sorted, phase == 2, cfg);
        iteration += 1;
    }
    let (log_likelihood, model) = best.expect("at least one E-step ran");
    Ok(EmFit {
        model,
        log_likelihood,
        trace,
        converged,
    })
}

fn quantile_means(sorted: &[f64], k: usize) -> Vec<f64> {
    let n = sorted.len();
    (0..k)
        .map(|j| {
            let idx = (((j as f64 + 0.5) / k as f64) * n as f64) as usize;
            sorted[idx.min(n - 1)]
        })
        .collect()
}

/// Mixture EM for exactly `iters` iterations, or `None` if a component collapses.
fn run_mixture(
    x: &[f64],
    means: &[f64],
    sd: f64,
    family: Symmetry,
    iters: usize,
    cfg: &HillClimbConfig,
) -> Option<(Vec<f64>, Vec<AsymmetricNormal>)> {
    let k = means.len();
    let n = x.len();
    let mut w = vec![1.0 / k as f64; k];
    let mut comps: Vec<AsymmetricNormal> = means
        .iter()
        .map(|&m| AsymmetricNormal::symmetric(m, sd).ok())
        .collect::<Option<_>>()?;
    let mut resp = vec![vec![0.0; n]; k];
    for _ in 0..iters {
        for (i, &xi) in x.iter().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|j| w[j].ln() + comps[j].ln_density(xi))
                .collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !m.is_finite() {
                return None;
            }
            let z: f64 = logs.iter().map(|l| (l - m).exp()).sum();
            for j in 0..k {
                resp[j][i] = (logs[j] - m).exp() / z;
            }
        }
        for j in 0..k {
            let nk: f64 = resp[j].iter().sum();
            // fewer than two points' worth of responsibility
            if !(nk >= 2.0) {
                return None;
            }
            w[j] = nk / n as f64;
            comps[j] = fit_emission(
                x,
                resp[j].clone(),
                &comps[j],
                family == Symmetry::Asymmetric,
                cfg,
            )?;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some((w, comps))
}

/// Mixture-model initialisation: `pi = w` and every transition row equal to `w`.
///
/// Means start at evenly spaced sample quantiles with the overall standard
/// deviation; a collapsed component triggers up to five re-seeded retries
/// from random distinct observations.
pub fn mixture_init<R: Rng + ?Sized>(
    obs: &ObservationSeries,
    k: usize,
    family: Symmetry,
    rng: &mut R,
    iters: usize,
) -> Result<HmmModel> {
    if k < 2 {
        return Err(Error::Validation(format!(
            "an HMM needs K >= 2 states, got {k}"
        )));
    }
    let mut x: Vec<f64> = obs.observed().collect();
    if x.len() < 10 * k {
        return Err(Error::InsufficientData {
            needed: 10 * k,
            got: x.len(),
        });
    }
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(Error::DegenerateScale("sigma = 0"));
    }
    let cfg = EmConfig::default().hill_climb;
    let mut means = quantile_means(&x, k);
    for attempt in 0..=MAX_RESEEDS {
        if let Some((w, comps)) = run_mixture(&x, &means, sd, family, iters, &cfg) {
            let trans = vec![w.clone(); k];
            return Ok(HmmModel {
                pi: w,
                trans,
                emissions: comps,
            });
        }
        if attempt < MAX_RESEEDS {
            means = sample(rng, x.len(), k).into_iter().map(|i| x[i]).collect();
            means.sort_by(f64::total_cmp);
        }
    }
    Err(Error::Numerics(format!(
        "mixture component collapsed after {MAX_RESEEDS} re-seeded retries"
    )))
}

/// Result of the full fitting pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineFit {
    pub init: HmmModel,
    pub fit: EmFit,
}

/// Symmetric mixture initialisation followed by Baum-Welch in `family`.
/// Both families share the initial model, so the asymmetric run extends
/// the symmetric trace and can only end with a higher likelihood.
pub fn fit_pipeline<R: Rng + ?Sized>(
    obs: &ObservationSeries,
    k: usize,
    family: Symmetry,
    rng: &mut R,
    cfg: &EmConfig,
) -> Result<PipelineFit> {
    let init = mixture_init(obs, k, Symmetry::Symmetric, rng, MIXTURE_ITERS)?;
    let mut fit = baum_welch(&init, obs, family, cfg)?;
    fit.model = fit.model.sorted_by_mu();
    Ok(PipelineFit { init, fit })
}
