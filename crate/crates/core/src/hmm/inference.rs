use crate::dist::AsymmetricDensity;

use super::{HmmModel, ObservationSeries, PosteriorSummary};

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Emission log-densities; a missing step contributes 0 for every state.
fn emission_logs(model: &HmmModel, obs: &ObservationSeries) -> Vec<Vec<f64>> {
    obs.values()
        .iter()
        .map(|v| match v {
            Some(x) => model.emissions().iter().map(|e| e.ln_density(*x)).collect(),
            None => vec![0.0; model.k()],
        })
        .collect()
}

pub(super) struct EStep {
    pub summary: PosteriorSummary,
    /// Expected transition counts `sum_t P(s_t = i, s_t+1 = j | data)`.
    pub xi: Vec<Vec<f64>>,
}

pub(super) fn e_step(model: &HmmModel, obs: &ObservationSeries) -> EStep {
    let k = model.k();
    let n = obs.len();
    let em = emission_logs(model, obs);
    let ln_pi: Vec<f64> = model.pi().iter().map(|p| p.ln()).collect();
    let ln_t: Vec<Vec<f64>> = model
        .trans()
        .iter()
        .map(|r| r.iter().map(|p| p.ln()).collect())
        .collect();

    let mut fwd = vec![vec![0.0; k]; n];
    for j in 0..k {
        fwd[0][j] = ln_pi[j] + em[0][j];
    }
    for t in 1..n {
        for j in 0..k {
            let prev = &fwd[t - 1];
            fwd[t][j] = log_sum_exp((0..k).map(|i| prev[i] + ln_t[i][j])) + em[t][j];
        }
    }
    let mut bwd = vec![vec![0.0; k]; n];
    for t in (0..n.saturating_sub(1)).rev() {
        for i in 0..k {
            let next = &bwd[t + 1];
            let e = &em[t + 1];
            bwd[t][i] = log_sum_exp((0..k).map(|j| ln_t[i][j] + e[j] + next[j]));
        }
    }
    let ll = log_sum_exp(fwd[n - 1].iter().copied());

    let state_marginals = (0..n)
        .map(|t| {
            let mut g: Vec<f64> = (0..k).map(|j| (fwd[t][j] + bwd[t][j] - ll).exp()).collect();
            let s: f64 = g.iter().sum();
            g.iter_mut().for_each(|x| *x /= s);
            g
        })
        .collect();

    let mut xi = vec![vec![0.0; k]; k];
    for t in 0..n.saturating_sub(1) {
        for i in 0..k {
            let base = fwd[t][i] - ll;
            for j in 0..k {
                xi[i][j] += (base + ln_t[i][j] + em[t + 1][j] + bwd[t + 1][j]).exp();
            }
        }
    }

    EStep {
        summary: PosteriorSummary {
            state_marginals,
            log_likelihood: ll,
            observed: obs.values().iter().map(Option::is_some).collect(),
        },
        xi,
    }
}

/// Log-space forward-backward smoothing.
pub fn forward_backward(model: &HmmModel, obs: &ObservationSeries) -> PosteriorSummary {
    e_step(model, obs).summary
}
