//! Differentially private synthetic tabular data from noisy marginal tables.
//!
//! The pipeline: encode a categorical dataset against a domain spec, pick a
//! set of marginals to publish, add noise calibrated by the best of five
//! composition strategies, make the noisy marginals mutually consistent and
//! non-negative, then iteratively update a random dataset until it matches
//! them. An evaluation harness scores the result against the original with
//! random-marginal density, range-query accuracy, and a per-city Gini /
//! gender-pay-gap comparison.

pub mod consistency;
pub mod domain;
pub mod engineering;
pub mod error;
pub mod evaluation;
pub mod marginal;
pub mod privacy;
pub mod quota;
pub mod rng;
pub mod synthesis;

pub use domain::{load_csv, load_domain, random_dataset, AttributeKind, AttributeSpec, Dataset, Domain};
pub use error::{Error, Result};
pub use marginal::{
    compute_marginal, independent_product, l1_distance, MarginalRecord, MarginalSchema,
    MarginalTable, NormalizedMarginal,
};
pub use privacy::{
    add_noise, plan_noise, Neighboring, NoiseDistribution, NoisePlan, PrivacyParams, Sensitivity,
    Strategy, ZcdpBudget,
};
pub use synthesis::{synthesize, DecaySchedule, SynthesisConfig};
