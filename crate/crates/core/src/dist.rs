//! Asymmetric Laplace and asymmetric normal distributions.
//!
//! Both are two-piece constrained mixtures split at the mode `mu`: the left
//! half-line `x < mu` carries probability mass `p` and the right half-line
//! `x >= mu` carries `1 - p`. Each half is the base density with its own
//! scale, chosen so that the density is continuous at `mu`:
//!
//! | family  | left scale | right scale | density at `mu` (`beta`)          |
//! |---------|------------|-------------|-----------------------------------|
//! | Laplace | rate `lambda / alpha` | rate `lambda * alpha` | `lambda * alpha / (alpha^2 + 1)` |
//! | normal  | sd `sigma * alpha`    | sd `sigma / alpha`    | `2 alpha / (sigma (alpha^2 + 1))` |
//!
//! with `alpha = sqrt(p / (1 - p))`. Setting `p = 0.5` recovers the classical
//! symmetric distributions.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::special::{std_normal_cdf, std_normal_quantile, LN_SQRT_2PI};
use libm::erf;
use std::f64::consts::FRAC_1_SQRT_2;

/// Normalizing constant `Z` of the mixture form `Z psi = p phi_- + (1-p) phi_+`.
pub const MIXTURE_NORMALIZER: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Laplace,
    Normal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Laplace => f.write_str("laplace"),
            Family::Normal => f.write_str("normal"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "laplace" => Ok(Family::Laplace),
            "normal" => Ok(Family::Normal),
            other => Err(Error::domain(format!("unknown family `{other}`"))),
        }
    }
}

/// Whether a model keeps `p = 0.5` or fits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Asymmetric,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::Symmetric => "symmetric",
            Symmetry::Asymmetric => "asymmetric",
        })
    }
}

impl std::str::FromStr for Symmetry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Symmetry::Symmetric),
            "asymmetric" => Ok(Symmetry::Asymmetric),
            other => Err(Error::Validation(format!("unknown symmetry `{other}`"))),
        }
    }
}

/// Side-scale ratio `alpha = sqrt(p / (1 - p))`.
#[inline]
pub fn alpha_of(p: f64) -> f64 {
    (p / (1.0 - p)).sqrt()
}

fn check_weight(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "weight p must lie in (0, 1), got {p}"
        )))
    }
}

fn check_location(mu: f64) -> Result<()> {
    if mu.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "location mu must be finite, got {mu}"
        )))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("argument must be finite, got {x}")))
    }
}

/// Exponential-family view of a distribution at fixed split `mu`:
/// `f(x) = h(x) exp(eta . T(x) - A)`.
///
/// The sufficient statistics are the per-side distances to `mu`
/// (`|x - mu|` for Laplace, `(x - mu)^2` for normal) with the right side
/// (`x >= mu`) in the first slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyRepr {
    pub family: Family,
    pub mu: f64,
    pub natural_params: [f64; 2],
    pub log_partition: f64,
}

impl ExpFamilyRepr {
    /// `ln h(x)`.
    pub fn log_base_measure(&self, _x: f64) -> f64 {
        match self.family {
            Family::Laplace => 0.0,
            Family::Normal => -LN_SQRT_2PI,
        }
    }

    /// `T(x)`.
    pub fn sufficient_stats(&self, x: f64) -> [f64; 2] {
        let d = x - self.mu;
        let t = match self.family {
            Family::Laplace => d.abs(),
            Family::Normal => d * d,
        };
        if x >= self.mu {
            [t, 0.0]
        } else {
            [0.0, t]
        }
    }

    /// `ln h(x) + eta . T(x) - A`.
    pub fn ln_density(&self, x: f64) -> f64 {
        let t = self.sufficient_stats(x);
        self.log_base_measure(x) + self.natural_params[0] * t[0] + self.natural_params[1] * t[1]
            - self.log_partition
    }
}

/// Behaviour shared by both asymmetric families.
pub trait AsymmetricDensity {
    fn family(&self) -> Family;
    /// Split point and mode.
    fn mu(&self) -> f64;
    /// Underlying scale parameter: rate `lambda` for Laplace, `sigma` for normal.
    fn scale(&self) -> f64;
    /// Probability mass left of `mu`.
    fn p(&self) -> f64;
    /// Density value at `mu`, shared by both branches.
    fn beta(&self) -> f64;

    fn alpha(&self) -> f64 {
        alpha_of(self.p())
    }

    /// `ln psi(x)` for finite `x`, no validation.
    fn ln_density(&self, x: f64) -> f64;

    /// `ln phi(x; Theta_side)`: the base density with the parameters of the
    /// side that `x` falls on (without the mixture weight).
    fn ln_component(&self, x: f64) -> f64;

    fn cdf_unchecked(&self, x: f64) -> f64;

    fn quantile_unchecked(&self, q: f64) -> f64;

    /// Draw from the left branch given `v` uniform on (0, 1).
    fn left_draw(&self, v: f64) -> f64;

    /// Draw from the right branch given `v` uniform on (0, 1).
    fn right_draw(&self, v: f64) -> f64;

    fn exp_family(&self) -> ExpFamilyRepr;

    fn pdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.ln_density(x).exp())
    }

    fn ln_pdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.ln_density(x))
    }

    fn cdf(&self, x: f64) -> Result<f64> {
        check_x(x)?;
        Ok(self.cdf_unchecked(x))
    }

    fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must lie in (0, 1), got {q}"
            )));
        }
        if q == self.p() {
            return Ok(self.mu());
        }
        Ok(self.quantile_unchecked(q))
    }

    /// The mixture components `(phi_-(x; Theta_-), phi_+(x; Theta_+))`,
    /// each already multiplied by its half-line indicator.
    fn mixture_components(&self, x: f64) -> (f64, f64) {
        let c = self.ln_component(x).exp();
        if x >= self.mu() {
            (0.0, c)
        } else {
            (c, 0.0)
        }
    }

    /// Two-stage draw: pick a side with probability `p`, then invert the
    /// cdf of that truncated half.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64>
    where
        Self: Sized,
    {
        let p = self.p();
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.sample(Open01);
                if u < p {
                    self.left_draw(v)
                } else {
                    self.right_draw(v)
                }
            })
            .collect()
    }
}

/// Asymmetric Laplace distribution with split `mu`, rate `lambda` and left weight `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LaplaceRecord")]
pub struct AsymmetricLaplace {
    mu: f64,
    lambda: f64,
    p: f64,
}

#[derive(Deserialize)]
struct LaplaceRecord {
    mu: f64,
    lambda: f64,
    p: f64,
}

impl TryFrom<LaplaceRecord> for AsymmetricLaplace {
    type Error = Error;

    fn try_from(r: LaplaceRecord) -> Result<Self> {
        AsymmetricLaplace::new(r.mu, r.lambda, r.p)
    }
}

impl AsymmetricLaplace {
    pub fn new(mu: f64, lambda: f64, p: f64) -> Result<Self> {
        check_location(mu)?;
        check_positive("lambda", lambda)?;
        check_weight(p)?;
        Ok(Self { mu, lambda, p })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Rate on the left half, `lambda / alpha`.
    pub fn left_rate(&self) -> f64 {
        self.lambda / self.alpha()
    }

    /// Rate on the right half, `lambda * alpha`.
    pub fn right_rate(&self) -> f64 {
        self.lambda * self.alpha()
    }
}

impl AsymmetricDensity for AsymmetricLaplace {
    fn family(&self) -> Family {
        Family::Laplace
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn scale(&self) -> f64 {
        self.lambda
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn beta(&self) -> f64 {
        let a = self.alpha();
        self.lambda * a / (a * a + 1.0)
    }

    fn ln_density(&self, x: f64) -> f64 {
        let d = x - self.mu;
        let rate = if d >= 0.0 {
            self.right_rate()
        } else {
            -self.left_rate()
        };
        self.beta().ln() - rate * d
    }

    fn ln_component(&self, x: f64) -> f64 {
        let rate = if x >= self.mu {
            self.right_rate()
        } else {
            self.left_rate()
        };
        (0.5 * rate).ln() - rate * (x - self.mu).abs()
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        let d = x - self.mu;
        if d < 0.0 {
            self.p * (self.left_rate() * d).exp()
        } else {
            self.p + (1.0 - self.p) * -(-self.right_rate() * d).exp_m1()
        }
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        if q < self.p {
            self.mu + (q / self.p).ln() / self.left_rate()
        } else {
            self.mu - ((1.0 - q) / (1.0 - self.p)).ln() / self.right_rate()
        }
    }

    fn left_draw(&self, v: f64) -> f64 {
        self.mu + v.ln() / self.left_rate()
    }

    fn right_draw(&self, v: f64) -> f64 {
        self.mu - v.ln() / self.right_rate()
    }

    fn exp_family(&self) -> ExpFamilyRepr {
        ExpFamilyRepr {
            family: Family::Laplace,
            mu: self.mu,
            natural_params: [-self.right_rate(), -self.left_rate()],
            log_partition: -self.beta().ln(),
        }
    }
}

/// Asymmetric normal distribution with split `mu`, underlying scale `sigma`
/// and left weight `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalRecord")]
pub struct AsymmetricNormal {
    mu: f64,
    sigma: f64,
    p: f64,
}

#[derive(Deserialize)]
struct NormalRecord {
    mu: f64,
    sigma: f64,
    p: f64,
}

impl TryFrom<NormalRecord> for AsymmetricNormal {
    type Error = Error;

    fn try_from(r: NormalRecord) -> Result<Self> {
        AsymmetricNormal::new(r.mu, r.sigma, r.p)
    }
}

impl AsymmetricNormal {
    pub fn new(mu: f64, sigma: f64, p: f64) -> Result<Self> {
        check_location(mu)?;
        check_positive("sigma", sigma)?;
        check_weight(p)?;
        Ok(Self { mu, sigma, p })
    }

    pub fn symmetric(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(mu, sigma, 0.5)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Standard deviation of the left half, `sigma * alpha`.
    pub fn left_sd(&self) -> f64 {
        self.sigma * self.alpha()
    }

    /// Standard deviation of the right half, `sigma / alpha`.
    pub fn right_sd(&self) -> f64 {
        self.sigma / self.alpha()
    }

    fn side_sd(&self, x: f64) -> f64 {
        if x >= self.mu {
            self.right_sd()
        } else {
            self.left_sd()
        }
    }
}

impl AsymmetricDensity for AsymmetricNormal {
    fn family(&self) -> Family {
        Family::Normal
    }

    fn mu(&self) -> f64 {
        self.mu
    }

    fn scale(&self) -> f64 {
        self.sigma
    }

    fn p(&self) -> f64 {
        self.p
    }

    fn beta(&self) -> f64 {
        let a = self.alpha();
        2.0 * a / (self.sigma * (a * a + 1.0))
    }

    fn ln_density(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.side_sd(x);
        self.beta().ln() - LN_SQRT_2PI - 0.5 * z * z
    }

    fn ln_component(&self, x: f64) -> f64 {
        let sd = self.side_sd(x);
        let z = (x - self.mu) / sd;
        -sd.ln() - LN_SQRT_2PI - 0.5 * z * z
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        let d = x - self.mu;
        if d < 0.0 {
            2.0 * self.p * std_normal_cdf(d / self.left_sd())
        } else {
            self.p + (1.0 - self.p) * erf(d / self.right_sd() * FRAC_1_SQRT_2)
        }
    }

    fn quantile_unchecked(&self, q: f64) -> f64 {
        if q < self.p {
            self.mu + self.left_sd() * std_normal_quantile(q / (2.0 * self.p))
        } else {
            self.mu - self.right_sd() * std_normal_quantile((1.0 - q) / (2.0 * (1.0 - self.p)))
        }
    }

    fn left_draw(&self, v: f64) -> f64 {
        self.mu + self.left_sd() * std_normal_quantile(0.5 * v)
    }

    fn right_draw(&self, v: f64) -> f64 {
        self.mu - self.right_sd() * std_normal_quantile(0.5 * v)
    }

    fn exp_family(&self) -> ExpFamilyRepr {
        let (l, r) = (self.left_sd(), self.right_sd());
        ExpFamilyRepr {
            family: Family::Normal,
            mu: self.mu,
            natural_params: [-0.5 / (r * r), -0.5 / (l * l)],
            log_partition: -self.beta().ln(),
        }
    }
}

/// Either asymmetric family. Serializes as `{"family","mu","scale","p"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamRecord", try_from = "ParamRecord")]
pub enum Asymmetric {
    Laplace(AsymmetricLaplace),
    Normal(AsymmetricNormal),
}

/// Flat parameter record used for JSON exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub family: Family,
    pub mu: f64,
    pub scale: f64,
    pub p: f64,
}

impl From<Asymmetric> for ParamRecord {
    fn from(d: Asymmetric) -> Self {
        ParamRecord {
            family: d.family(),
            mu: d.mu(),
            scale: d.scale(),
            p: d.p(),
        }
    }
}

impl TryFrom<ParamRecord> for Asymmetric {
    type Error = Error;

    fn try_from(r: ParamRecord) -> Result<Self> {
        Asymmetric::new(r.family, r.mu, r.scale, r.p)
    }
}

impl From<AsymmetricLaplace> for Asymmetric {
    fn from(d: AsymmetricLaplace) -> Self {
        Asymmetric::Laplace(d)
    }
}

impl From<AsymmetricNormal> for Asymmetric {
    fn from(d: AsymmetricNormal) -> Self {
        Asymmetric::Normal(d)
    }
}

impl Asymmetric {
    pub fn new(family: Family, mu: f64, scale: f64, p: f64) -> Result<Self> {
        Ok(match family {
            Family::Laplace => AsymmetricLaplace::new(mu, scale, p)?.into(),
            Family::Normal => AsymmetricNormal::new(mu, scale, p)?.into(),
        })
    }

    pub fn as_normal(&self) -> Option<&AsymmetricNormal> {
        match self {
            Asymmetric::Normal(n) => Some(n),
            Asymmetric::Laplace(_) => None,
        }
    }
}

macro_rules! delegate {
    ($self:ident, $d:ident => $e:expr) => {
        match $self {
            Asymmetric::Laplace($d) => $e,
            Asymmetric::Normal($d) => $e,
        }
    };
}

impl AsymmetricDensity for Asymmetric {
    fn family(&self) -> Family {
        delegate!(self, d => d.family())
    }
    fn mu(&self) -> f64 {
        delegate!(self, d => d.mu())
    }
    fn scale(&self) -> f64 {
        delegate!(self, d => d.scale())
    }
    fn p(&self) -> f64 {
        delegate!(self, d => d.p())
    }
    fn beta(&self) -> f64 {
        delegate!(self, d => d.beta())
    }
    fn ln_density(&self, x: f64) -> f64 {
        delegate!(self, d => d.ln_density(x))
    }
    fn ln_component(&self, x: f64) -> f64 {
        delegate!(self, d => d.ln_component(x))
    }
    fn cdf_unchecked(&self, x: f64) -> f64 {
        delegate!(self, d => d.cdf_unchecked(x))
    }
    fn quantile_unchecked(&self, q: f64) -> f64 {
        delegate!(self, d => d.quantile_unchecked(q))
    }
    fn left_draw(&self, v: f64) -> f64 {
        delegate!(self, d => d.left_draw(v))
    }
    fn right_draw(&self, v: f64) -> f64 {
        delegate!(self, d => d.right_draw(v))
    }
    fn exp_family(&self) -> ExpFamilyRepr {
        delegate!(self, d => d.exp_family())
    }
}
