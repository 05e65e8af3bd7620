//! Hidden Markov models with (a)symmetric normal emissions.

mod em;
mod inference;
mod report;

pub use em::{
    baum_welch, fit_pipeline, mixture_init, EmConfig, EmFit, EmIteration, PipelineFit,
    MIXTURE_ITERS,
};
pub use inference::forward_backward;
pub use report::{state_entropy_report, transition_entropy, EntropyReport, HISTOGRAM_BINS};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{AsymmetricDensity, AsymmetricNormal};
use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

fn check_distribution(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Validation(format!(
            "{what} has negative or non-finite entries"
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Validation(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Initial distribution `pi`, row-stochastic transitions and one emission per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRecord", into = "ModelRecord")]
pub struct HmmModel {
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    emissions: Vec<AsymmetricNormal>,
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    #[serde(rename = "K")]
    k: usize,
    pi: Vec<f64>,
    trans: Vec<Vec<f64>>,
    emissions: Vec<AsymmetricNormal>,
}

impl TryFrom<ModelRecord> for HmmModel {
    type Error = Error;

    fn try_from(r: ModelRecord) -> Result<Self> {
        if r.k != r.pi.len() {
            return Err(Error::Validation(format!(
                "K = {} but pi has {} entries",
                r.k,
                r.pi.len()
            )));
        }
        HmmModel::new(r.pi, r.trans, r.emissions)
    }
}

impl From<HmmModel> for ModelRecord {
    fn from(m: HmmModel) -> Self {
        ModelRecord {
            k: m.pi.len(),
            pi: m.pi,
            trans: m.trans,
            emissions: m.emissions,
        }
    }
}

impl HmmModel {
    pub fn new(
        pi: Vec<f64>,
        trans: Vec<Vec<f64>>,
        emissions: Vec<AsymmetricNormal>,
    ) -> Result<Self> {
        let k = pi.len();
        if k < 2 {
            return Err(Error::Validation(format!(
                "an HMM needs K >= 2 states, got {k}"
            )));
        }
        if trans.len() != k || trans.iter().any(|r| r.len() != k) || emissions.len() != k {
            return Err(Error::Validation(
                "pi, trans and emissions disagree on K".into(),
            ));
        }
        check_distribution(&pi, "pi")?;
        for (i, row) in trans.iter().enumerate() {
            check_distribution(row, &format!("transition row {i}"))?;
        }
        Ok(Self {
            pi,
            trans,
            emissions,
        })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn trans(&self) -> &[Vec<f64>] {
        &self.trans
    }

    pub fn emissions(&self) -> &[AsymmetricNormal] {
        &self.emissions
    }

    /// The same model with states reordered by `order[new] = old`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            pi: order.iter().map(|&i| self.pi[i]).collect(),
            trans: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.trans[i][j]).collect())
                .collect(),
            emissions: order.iter().map(|&i| self.emissions[i]).collect(),
        }
    }

    /// States sorted by emission split `mu` (stable for reports).
    pub fn sorted_by_mu(&self) -> Self {
        let mut order: Vec<usize> = (0..self.k()).collect();
        order.sort_by(|&a, &b| self.emissions[a].mu().total_cmp(&self.emissions[b].mu()));
        self.permuted(&order)
    }

    /// Draws a state path and observations of length `len`.
    pub fn simulate<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> (Vec<usize>, Vec<f64>) {
        let mut states = Vec::with_capacity(len);
        let mut values = Vec::with_capacity(len);
        let mut s = draw_index(&self.pi, rng);
        for t in 0..len {
            if t > 0 {
                s = draw_index(&self.trans[s], rng);
            }
            states.push(s);
            values.push(self.emissions[s].sample(rng, 1)[0]);
        }
        (states, values)
    }
}

fn draw_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Time-indexed observations; `None` marks a missing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSeries {
    values: Vec<Option<f64>>,
}

impl ObservationSeries {
    pub fn new(values: Vec<Option<f64>>) -> Result<Self> {
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("observations must be finite".into()));
        }
        if values.iter().all(Option::is_none) {
            return Err(Error::Validation("series has no observed values".into()));
        }
        Ok(Self { values })
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| Some(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied()
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// Smoothed state marginals and the exact data log-likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub state_marginals: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    /// Whether step `t` carried an observation.
    pub observed: Vec<bool>,
}
