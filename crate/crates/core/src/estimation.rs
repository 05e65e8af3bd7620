//! Maximum-likelihood fitting of the asymmetric families.
//!
//! For a fixed weight `p` both families have closed-form optima:
//!
//! * Laplace: the split minimises the convex piecewise-linear functional
//!   `gamma(mu) = alpha * sum_{s >= mu} (s - mu) + alpha^-1 * sum_{s < mu} (mu - s)`,
//!   i.e. a weighted median with weights `alpha^-1` (left) and `alpha`
//!   (right). Its breakpoints are the samples, so scanning the samples with
//!   prefix sums finds a minimiser. The rate is `lambda = |S| / gamma(mu*)`.
//! * Normal: `gamma(mu) = alpha^-2 sum_{s < mu} (s - mu)^2 + alpha^2 sum_{s >= mu} (s - mu)^2`
//!   is strictly convex, so exactly one inter-sample interval contains the
//!   stationary point of its own induced partition. `sigma^2 = gamma(mu*) / |S|`.
//!
//! The weight `p` itself is found by a bracketing hill-climb that starts
//! from the symmetric fit at `p = 0.5`.
//!
//! Every routine accepts weighted samples; unit weights give the plain
//! likelihood and responsibilities give the EM M-step.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::dist::{
    alpha_of, Asymmetric, AsymmetricDensity, AsymmetricLaplace, AsymmetricNormal, Family,
    MIXTURE_NORMALIZER,
};
use crate::error::{Error, Result};

/// Sorted observations with optional weights and prefix-sum caches.
///
/// Prefix sums are kept relative to an internal shift (the middle sample) so
/// that partition statistics do not lose precision for data far from zero.
#[derive(Debug, Clone)]
pub struct SampleSet {
    values: Vec<f64>,
    weights: Option<Vec<f64>>,
    shift: f64,
    cum_w: Vec<f64>,
    cum_s: Vec<f64>,
}

impl SampleSet {
    /// Unit-weight sample set. Values are sorted ascending.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "sample values must be finite, got {bad}"
            )));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self::build(values, None))
    }

    /// Weighted sample set from `(value, weight)` pairs. Weights must be
    /// finite and non-negative with a positive total.
    pub fn weighted(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, weights) = pairs.into_iter().unzip();
        Self::from_sorted_weighted(values, weights)
    }

    /// Weighted sample set from values already sorted ascending.
    pub fn from_sorted_weighted(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::domain("values and weights differ in length"));
        }
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("sample values must be finite"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::domain("values must be sorted ascending"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::domain("total weight must be positive"));
        }
        Ok(Self::build(values, Some(weights)))
    }

    fn build(values: Vec<f64>, weights: Option<Vec<f64>>) -> Self {
        let n = values.len();
        let shift = values[n / 2];
        let mut cum_w = Vec::with_capacity(n + 1);
        let mut cum_s = Vec::with_capacity(n + 1);
        let (mut w_acc, mut s_acc) = (0.0, 0.0);
        cum_w.push(0.0);
        cum_s.push(0.0);
        for (i, &v) in values.iter().enumerate() {
            let w = weights.as_ref().map_or(1.0, |ws| ws[i]);
            w_acc += w;
            s_acc += w * (v - shift);
            cum_w.push(w_acc);
            cum_s.push(s_acc);
        }
        Self {
            values,
            weights,
            shift,
            cum_w,
            cum_s,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sorted values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// Total weight `|S|`.
    pub fn total_weight(&self) -> f64 {
        self.cum_w[self.len()]
    }

    /// Weight of the `k` smallest samples.
    pub fn prefix_weight(&self, k: usize) -> f64 {
        self.cum_w[k]
    }

    /// Weighted sum of the `k` smallest samples.
    pub fn prefix_sum(&self, k: usize) -> f64 {
        self.cum_s[k] + self.shift * self.cum_w[k]
    }

    /// Number of samples strictly below `mu` (the size of `S_-`).
    pub fn count_below(&self, mu: f64) -> usize {
        self.values.partition_point(|&v| v < mu)
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, self.weight(i)))
    }

    /// Checks the fixed-p fit preconditions: at least two samples with
    /// positive weight, not all equal.
    fn check_spread(&self, what: &'static str) -> Result<()> {
        let mut support = self.iter().filter(|&(_, w)| w > 0.0).map(|(v, _)| v);
        let first = support.next();
        let mut count = usize::from(first.is_some());
        let mut spread = false;
        for v in support {
            count += 1;
            if Some(v) != first {
                spread = true;
            }
        }
        if count < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: count,
            });
        }
        if !spread {
            return Err(Error::DegenerateScale(what));
        }
        Ok(())
    }
}

/// A fitted distribution with its log-likelihood and induced partition size `|S_-|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub dist: Asymmetric,
    pub log_likelihood: f64,
    pub partition_index: usize,
}

/// The three additive parts of the log-likelihood:
/// `ln L = -|S| ln Z + ln L_p + ln L_phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodTerms {
    /// `-|S| ln Z`.
    pub normalizer: f64,
    /// `ln L_p = |S_-| ln p + |S_+| ln(1 - p)`.
    pub weighting: f64,
    /// `ln L_phi`: base densities of each side with their side parameters.
    pub component: f64,
}

impl LikelihoodTerms {
    pub fn total(&self) -> f64 {
        self.normalizer + self.weighting + self.component
    }
}

pub fn likelihood_terms<D: AsymmetricDensity>(dist: &D, samples: &SampleSet) -> LikelihoodTerms {
    let mu = dist.mu();
    let p = dist.p();
    let k = samples.count_below(mu);
    let w_left = samples.prefix_weight(k);
    let w_right = samples.total_weight() - w_left;
    let component = samples
        .iter()
        .filter(|&(_, w)| w != 0.0)
        .map(|(s, w)| w * dist.ln_component(s))
        .sum();
    LikelihoodTerms {
        normalizer: -samples.total_weight() * MIXTURE_NORMALIZER.ln(),
        weighting: w_left * p.ln() + w_right * (1.0 - p).ln(),
        component,
    }
}

/// Log-likelihood of `dist` on `samples`, computed through the mixture decomposition.
pub fn log_likelihood<D: AsymmetricDensity>(dist: &D, samples: &SampleSet) -> f64 {
    likelihood_terms(dist, samples).total()
}

/// The partition-independent asymmetry term `(n/2)(ln p + ln(1-p))`,
/// equal to `-n H(Be(1/2)) - n KL(Be(1/2) || Be(p))` in nats.
pub fn entropy_penalty(p: f64, n: f64) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    0.5 * n * (p.ln() + (1.0 - p).ln())
}

fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("p must lie in (0, 1), got {p}")))
    }
}

/// The Laplace split functional `gamma(mu)` evaluated directly.
pub fn laplace_gamma(samples: &SampleSet, p: f64, mu: f64) -> f64 {
    let a = alpha_of(p);
    samples
        .iter()
        .map(|(s, w)| {
            if s >= mu {
                w * a * (s - mu)
            } else {
                w * (mu - s) / a
            }
        })
        .sum()
}

/// The normal split functional `gamma(mu)` evaluated directly.
pub fn normal_gamma(samples: &SampleSet, p: f64, mu: f64) -> f64 {
    let a2 = p / (1.0 - p);
    samples
        .iter()
        .map(|(s, w)| {
            let d = s - mu;
            if s >= mu {
                w * a2 * d * d
            } else {
                w * d * d / a2
            }
        })
        .sum()
}

/// Closed-form Laplace fit at fixed `p`.
pub fn fit_laplace_fixed_p(samples: &SampleSet, p: f64) -> Result<FitResult> {
    check_p(p)?;
    samples.check_spread("lambda -> infinity")?;
    let a = alpha_of(p);
    let n = samples.len();
    let total_w = samples.total_weight();
    let total_s = samples.prefix_sum(n);
    let vals = samples.values();

    // k skips repeated values, so it is always the count of samples below vals[k]
    let mut best: Option<(f64, usize)> = None;
    for k in 0..n {
        if k > 0 && vals[k] == vals[k - 1] {
            continue;
        }
        let mu = vals[k];
        let (wl, sl) = (samples.prefix_weight(k), samples.prefix_sum(k));
        let g = a * ((total_s - sl) - (total_w - wl) * mu) + (wl * mu - sl) / a;
        if best.is_none_or(|(bg, _)| g < bg) {
            best = Some((g, k));
        }
    }
    let (_, idx) = best.ok_or_else(|| Error::InvariantViolation("empty sample scan".into()))?;
    let mu = vals[idx];
    let gamma = laplace_gamma(samples, p, mu);
    if gamma <= 0.0 || !gamma.is_finite() {
        return Err(Error::DegenerateScale("lambda -> infinity"));
    }
    let lambda = total_w / gamma;
    let dist = AsymmetricLaplace::new(mu, lambda, p)?;
    Ok(FitResult {
        log_likelihood: log_likelihood(&dist, samples),
        dist: dist.into(),
        partition_index: idx,
    })
}

/// A candidate split from the normal partition scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionCandidate {
    /// Size of `S_-` for this interval.
    pub index: usize,
    pub mu: f64,
    /// Whether `mu` lies inside its own interval `(s_{index-1}, s_index]`.
    pub valid: bool,
    /// Distance by which `mu` misses its interval (0 when valid).
    pub violation: f64,
}

fn scan_normal_intervals(samples: &SampleSet, p: f64) -> Vec<PartitionCandidate> {
    let a2 = p / (1.0 - p);
    let inv_a2 = 1.0 / a2;
    let n = samples.len();
    let vals = samples.values();
    let total_w = samples.total_weight();
    let total_c = samples.cum_s[n];
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let lower = if k == 0 {
            f64::NEG_INFINITY
        } else {
            vals[k - 1]
        };
        let upper = if k == n { f64::INFINITY } else { vals[k] };
        if lower == upper {
            continue;
        }
        let wl = samples.cum_w[k];
        let denom = inv_a2 * wl + a2 * (total_w - wl);
        if denom <= 0.0 {
            continue;
        }
        let centered = (inv_a2 * samples.cum_s[k] + a2 * (total_c - samples.cum_s[k])) / denom;
        let mu = samples.shift + centered;
        let valid = lower < mu && mu <= upper;
        let violation = if mu <= lower {
            lower - mu
        } else if mu > upper {
            mu - upper
        } else {
            0.0
        };
        out.push(PartitionCandidate {
            index: k,
            mu,
            valid,
            violation,
        });
    }
    out
}

/// Intervals whose stationary point lies inside the interval itself.
/// Strict convexity of the normal functional makes this exactly one interval
/// in exact arithmetic.
pub fn normal_partition_candidates(samples: &SampleSet, p: f64) -> Result<Vec<PartitionCandidate>> {
    check_p(p)?;
    Ok(scan_normal_intervals(samples, p)
        .into_iter()
        .filter(|c| c.valid)
        .collect())
}

fn normal_fit_at(samples: &SampleSet, mu: f64, p: f64) -> Result<FitResult> {
    let var = normal_gamma(samples, p, mu) / samples.total_weight();
    if var <= 0.0 || !var.is_finite() {
        return Err(Error::DegenerateScale("sigma = 0"));
    }
    let dist = AsymmetricNormal::new(mu, var.sqrt(), p)?;
    Ok(FitResult {
        log_likelihood: log_likelihood(&dist, samples),
        dist: dist.into(),
        partition_index: samples.count_below(mu),
    })
}

/// Closed-form normal fit at fixed `p`.
pub fn fit_normal_fixed_p(samples: &SampleSet, p: f64) -> Result<FitResult> {
    check_p(p)?;
    samples.check_spread("sigma = 0")?;
    let scan = scan_normal_intervals(samples, p);
    let valid: Vec<&PartitionCandidate> = scan.iter().filter(|c| c.valid).collect();
    let mu = match valid.as_slice() {
        [one] => one.mu,
        [] => {
            // rounding can push a split sitting exactly on a sample just
            // outside both neighbouring intervals
            let near = scan
                .iter()
                .min_by(|a, b| a.violation.total_cmp(&b.violation))
                .ok_or_else(|| Error::InvariantViolation("no partition intervals".into()))?;
            if near.violation > 1e-9 * (1.0 + near.mu.abs()) {
                return Err(Error::InvariantViolation(format!(
                    "no valid split candidate (closest misses by {})",
                    near.violation
                )));
            }
            let vals = samples.values();
            if near.index < vals.len() && near.mu > vals[near.index] {
                vals[near.index]
            } else {
                near.mu
            }
        }
        many => many
            .iter()
            .map(|c| (normal_gamma(samples, p, c.mu), c.mu))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, mu)| mu)
            .unwrap_or(many[0].mu),
    };
    normal_fit_at(samples, mu, p)
}

/// Normal fit with the split held at `mu`; only `sigma` is optimised.
pub fn fit_normal_fixed_mu(samples: &SampleSet, mu: f64, p: f64) -> Result<FitResult> {
    check_p(p)?;
    if !mu.is_finite() {
        return Err(Error::domain("mu must be finite"));
    }
    normal_fit_at(samples, mu, p)
}

pub fn fit_fixed_p(samples: &SampleSet, family: Family, p: f64) -> Result<FitResult> {
    match family {
        Family::Laplace => fit_laplace_fixed_p(samples, p),
        Family::Normal => fit_normal_fixed_p(samples, p),
    }
}

/// Distance kept from 0 and 1 when evaluating candidate weights.
pub const P_BOUNDARY: f64 = 1e-6;

/// Settings of the bracketing hill-climb over `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClimbConfig {
    pub initial_step: f64,
    pub tolerance: f64,
    pub shrink: f64,
    pub max_iters: usize,
}

impl Default for HillClimbConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            tolerance: 1e-4,
            shrink: 0.5,
            max_iters: 10_000,
        }
    }
}

impl HillClimbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return Err(Error::domain("initial step must be positive"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::domain("tolerance must be positive"));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::domain("shrink factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepAction {
    Start,
    Right,
    Left,
    Shrink,
}

/// One entry of the hill-climb audit trail: the centre after `action`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillClimbStep {
    pub iteration: usize,
    pub action: StepAction,
    pub p: f64,
    pub log_likelihood: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HillClimbOutcome {
    pub fit: FitResult,
    pub trace: Vec<HillClimbStep>,
}

/// Full fit: hill-climb over `p` starting from 0.5 with closed-form fixed-`p` fits.
pub fn hill_climb_p(
    samples: &SampleSet,
    family: Family,
    cfg: &HillClimbConfig,
) -> Result<HillClimbOutcome> {
    hill_climb(0.5, cfg, |p| fit_fixed_p(samples, family, p))
}

/// The hill-climb over `p` for an arbitrary profile objective `p -> best fit at p`.
///
/// Candidates outside (0, 1) score negative infinity; candidates inside
/// are clamped to `[P_BOUNDARY, 1 - P_BOUNDARY]`.
pub fn hill_climb<F>(
    start_p: f64,
    cfg: &HillClimbConfig,
    mut objective: F,
) -> Result<HillClimbOutcome>
where
    F: FnMut(f64) -> Result<FitResult>,
{
    cfg.validate()?;
    check_p(start_p)?;
    let mut cache: HashMap<u64, FitResult> = HashMap::new();
    let mut eval = |p: f64, center: f64| -> Result<Option<FitResult>> {
        if !(p > 0.0 && p < 1.0) {
            return Ok(None);
        }
        let p = p.clamp(P_BOUNDARY, 1.0 - P_BOUNDARY);
        if p == center {
            return Ok(None);
        }
        if let Some(hit) = cache.get(&p.to_bits()) {
            return Ok(Some(hit.clone()));
        }
        let fit = objective(p)?;
        cache.insert(p.to_bits(), fit.clone());
        Ok(Some(fit))
    };

    let mut p = start_p.clamp(P_BOUNDARY, 1.0 - P_BOUNDARY);
    let mut center = eval(p, f64::NAN)?.expect("start lies in (0, 1)");
    if !center.log_likelihood.is_finite() {
        return Err(Error::Numerics(format!("non-finite likelihood at p = {p}")));
    }
    let mut step = cfg.initial_step;
    let mut trace = vec![HillClimbStep {
        iteration: 0,
        action: StepAction::Start,
        p,
        log_likelihood: center.log_likelihood,
        step,
    }];
    let mut iteration = 0;
    while step >= cfg.tolerance {
        loop {
            if iteration >= cfg.max_iters {
                return Err(Error::ConvergenceFailure {
                    iterations: iteration,
                    best: Box::new(center),
                });
            }
            iteration += 1;
            let mut action = StepAction::Shrink;
            if let Some(right) = eval(p + step, p)? {
                if right.log_likelihood >= center.log_likelihood {
                    p = right.dist.p();
                    center = right;
                    action = StepAction::Right;
                }
            }
            if action == StepAction::Shrink {
                if let Some(left) = eval(p - step, p)? {
                    if left.log_likelihood >= center.log_likelihood {
                        p = left.dist.p();
                        center = left;
                        action = StepAction::Left;
                    }
                }
            }
            if action == StepAction::Shrink {
                step *= cfg.shrink;
            }
            trace.push(HillClimbStep {
                iteration,
                action,
                p,
                log_likelihood: center.log_likelihood,
                step,
            });
            if action == StepAction::Shrink {
                break;
            }
        }
    }
    Ok(HillClimbOutcome { fit: center, trace })
}
