use serde::{Deserialize, Serialize};

use crate::special::quantile_sorted;

use super::{HmmModel, PosteriorSummary};

pub const HISTOGRAM_BINS: usize = 20;

fn entropy_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Shannon entropy (bits) of each transition row.
pub fn transition_entropy(model: &HmmModel) -> Vec<f64> {
    model.trans().iter().map(|r| entropy_bits(r)).collect()
}

/// Normalised entropy `H(marginal) / log2 K` of each kept time step, a
/// 20-bin histogram on [0, 1] and the percentiles 1..99.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub normalized: Vec<f64>,
    /// Counts per bin `[i/20, (i+1)/20)`; the last bin also holds 1.
    pub histogram: Vec<usize>,
    /// `(percentile, value)` for percentiles 1..=99.
    pub quantiles: Vec<(u32, f64)>,
}

pub fn state_entropy_report(
    summary: &PosteriorSummary,
    k: usize,
    include_missing: bool,
) -> EntropyReport {
    let max = (k as f64).log2();
    let normalized: Vec<f64> = summary
        .state_marginals
        .iter()
        .zip(&summary.observed)
        .filter(|(_, &obs)| include_missing || obs)
        .map(|(g, _)| (entropy_bits(g) / max).clamp(0.0, 1.0))
        .collect();
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for &h in &normalized {
        let bin = ((h * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        histogram[bin] += 1;
    }
    let mut sorted = normalized.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = if sorted.is_empty() {
        Vec::new()
    } else {
        (1..=99)
            .map(|q| (q, quantile_sorted(&sorted, q as f64 / 100.0)))
            .collect()
    };
    EntropyReport {
        normalized,
        histogram,
        quantiles,
    }
}
