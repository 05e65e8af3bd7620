//! Asymmetric Laplace and normal distributions built as two-piece
//! constrained mixtures, with closed-form maximum-likelihood fitting,
//! conjugate priors, asymmetric-noise linear regression and hidden Markov
//! models with asymmetric emissions.

pub mod bayes;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod hmm;
pub mod ingest;
pub mod regression;
pub mod special;

pub use dist::{
    Asymmetric, AsymmetricDensity, AsymmetricLaplace, AsymmetricNormal, ExpFamilyRepr, Family,
    Symmetry,
};
pub use error::{Error, Result};
pub use estimation::{FitResult, HillClimbConfig, SampleSet};
