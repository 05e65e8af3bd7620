//! Conjugate priors for both asymmetric families at a fixed split `mu`.
//!
//! Densities are the factored products of named densities evaluated in the
//! factor coordinates, with no Jacobian for the map back to `(scale, p)`:
//!
//! * Laplace: `G(lambda alpha; nu', chi1) G(lambda / alpha; nu', chi2) B(p; nu')`
//!   with `nu' = 1 + nu / 2` and gamma rates `chi`.
//! * normal: `Ig(sigma^2 alpha^2; nu2, chi2 / 2) Ig(sigma^2 / alpha^2; nu2, chi1 / 2) B(p; nu1)`
//!   with `nu1 = 1 + nu / 2` and `nu2 = nu / 4 - 1`.
//!
//! `chi1` collects the right-side statistic and `chi2` the left-side one.

use serde::{Deserialize, Serialize};

use crate::dist::{alpha_of, Family};
use crate::error::{Error, Result};
use crate::special::{ln_gamma_pdf, ln_inv_gamma_pdf, ln_sym_beta_pdf};

fn check_chi(chi1: f64, chi2: f64) -> Result<()> {
    if chi1.is_finite() && chi1 > 0.0 && chi2.is_finite() && chi2 > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "chi must be positive, got ({chi1}, {chi2})"
        )))
    }
}

fn check_point(scale: f64, p: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRecord")]
pub struct LaplacePrior {
    nu: f64,
    chi1: f64,
    chi2: f64,
    mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRecord")]
pub struct NormalPrior {
    nu: f64,
    chi1: f64,
    chi2: f64,
    mu: f64,
}

#[derive(Deserialize)]
struct PriorRecord {
    nu: f64,
    chi1: f64,
    chi2: f64,
    mu: f64,
}

impl TryFrom<PriorRecord> for LaplacePrior {
    type Error = Error;

    fn try_from(r: PriorRecord) -> Result<Self> {
        LaplacePrior::new(r.nu, r.chi1, r.chi2, r.mu)
    }
}

impl TryFrom<PriorRecord> for NormalPrior {
    type Error = Error;

    fn try_from(r: PriorRecord) -> Result<Self> {
        NormalPrior::new(r.nu, r.chi1, r.chi2, r.mu)
    }
}

impl LaplacePrior {
    pub fn new(nu: f64, chi1: f64, chi2: f64, mu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > -2.0) {
            return Err(Error::domain(format!(
                "Laplace prior needs nu > -2, got {nu}"
            )));
        }
        check_chi(chi1, chi2)?;
        if !mu.is_finite() {
            return Err(Error::domain("mu must be finite"));
        }
        Ok(Self { nu, chi1, chi2, mu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn chi1(&self) -> f64 {
        self.chi1
    }
    pub fn chi2(&self) -> f64 {
        self.chi2
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Shared gamma and beta shape `nu' = 1 + nu / 2`.
    pub fn shape(&self) -> f64 {
        1.0 + 0.5 * self.nu
    }

    /// Log-density in the factor coordinates `u = lambda alpha`, `v = lambda / alpha`, `p`.
    pub fn ln_density_factors(&self, u: f64, v: f64, p: f64) -> f64 {
        let k = self.shape();
        ln_gamma_pdf(u, k, self.chi1) + ln_gamma_pdf(v, k, self.chi2) + ln_sym_beta_pdf(p, k)
    }
}

impl NormalPrior {
    pub fn new(nu: f64, chi1: f64, chi2: f64, mu: f64) -> Result<Self> {
        if !(nu.is_finite() && nu > 4.0) {
            return Err(Error::domain(format!(
                "normal prior needs nu > 4, got {nu}"
            )));
        }
        check_chi(chi1, chi2)?;
        if !mu.is_finite() {
            return Err(Error::domain("mu must be finite"));
        }
        Ok(Self { nu, chi1, chi2, mu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn chi1(&self) -> f64 {
        self.chi1
    }
    pub fn chi2(&self) -> f64 {
        self.chi2
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Beta shape `nu1 = 1 + nu / 2`.
    pub fn beta_shape(&self) -> f64 {
        1.0 + 0.5 * self.nu
    }

    /// Inverse-gamma shape `nu2 = nu / 4 - 1`.
    pub fn inv_gamma_shape(&self) -> f64 {
        0.25 * self.nu - 1.0
    }

    /// Log-density in the factor coordinates `u = sigma^2 alpha^2` (left variance),
    /// `v = sigma^2 / alpha^2` (right variance) and `p`.
    pub fn ln_density_factors(&self, u: f64, v: f64, p: f64) -> f64 {
        let a = self.inv_gamma_shape();
        ln_inv_gamma_pdf(u, a, 0.5 * self.chi2)
            + ln_inv_gamma_pdf(v, a, 0.5 * self.chi1)
            + ln_sym_beta_pdf(p, self.beta_shape())
    }
}

pub fn prior_log_density_laplace(prior: &LaplacePrior, lambda: f64, p: f64) -> Result<f64> {
    check_point(lambda, p)?;
    let a = alpha_of(p);
    Ok(prior.ln_density_factors(lambda * a, lambda / a, p))
}

pub fn prior_log_density_normal(prior: &NormalPrior, sigma: f64, p: f64) -> Result<f64> {
    check_point(sigma, p)?;
    let a2 = p / (1.0 - p);
    let s2 = sigma * sigma;
    Ok(prior.ln_density_factors(s2 * a2, s2 / a2, p))
}

/// Priors that absorb the per-side sufficient statistics of their family.
pub trait ConjugatePrior: Sized {
    fn family(&self) -> Family;
    fn split(&self) -> f64;
    /// The prior after adding `t = [right, left]` statistic sums from `n` samples.
    fn absorb(&self, t: [f64; 2], n: f64) -> Self;
}

impl ConjugatePrior for LaplacePrior {
    fn family(&self) -> Family {
        Family::Laplace
    }
    fn split(&self) -> f64 {
        self.mu
    }
    fn absorb(&self, t: [f64; 2], n: f64) -> Self {
        Self {
            nu: self.nu + n,
            chi1: self.chi1 + t[0],
            chi2: self.chi2 + t[1],
            mu: self.mu,
        }
    }
}

impl ConjugatePrior for NormalPrior {
    fn family(&self) -> Family {
        Family::Normal
    }
    fn split(&self) -> f64 {
        self.mu
    }
    fn absorb(&self, t: [f64; 2], n: f64) -> Self {
        Self {
            nu: self.nu + n,
            chi1: self.chi1 + t[0],
            chi2: self.chi2 + t[1],
            mu: self.mu,
        }
    }
}

/// Conjugate update `chi += sum T(s)`, `nu += |S|` at the prior's split.
/// An empty slice returns the prior unchanged.
pub fn posterior_update<P: ConjugatePrior>(prior: &P, samples: &[f64]) -> P {
    let mu = prior.split();
    let family = prior.family();
    let mut t = [0.0; 2];
    for &s in samples {
        let d = s - mu;
        let stat = match family {
            Family::Laplace => d.abs(),
            Family::Normal => d * d,
        };
        if s >= mu {
            t[0] += stat;
        } else {
            t[1] += stat;
        }
    }
    prior.absorb(t, samples.len() as f64)
}
