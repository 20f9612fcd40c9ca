//! Run configuration: a JSON file mirrored by command-line flags, with flags
//! taking precedence.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use privtab::error::{Error, Result};
use privtab::privacy::Neighboring;
use privtab::synthesis::{DecaySchedule, SynthesisConfig};

/// Everything a synthesis run needs. One seed drives every randomized stage;
/// sub-seeds are derived per stage and schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input data CSV.
    pub data: PathBuf,
    /// Domain spec JSON.
    pub domain: PathBuf,
    /// Marginal-config JSON (which marginals, compression rules, recodes).
    pub config: PathBuf,
    /// Output directory for the synthetic CSV, marginal archive, manifest.
    pub out: PathBuf,
    pub epsilon: f64,
    pub delta: f64,
    pub neighboring: Neighboring,
    pub seed: u64,
    pub alpha0: f64,
    pub decay: DecaySchedule,
    pub iterations: usize,
    pub dup_ramp: f64,
    pub convergence_tol: f64,
    /// Fraction of the budget spent on the one-way marginals that drive
    /// attribute compression (only when compression is configured).
    pub compress_budget_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthesisConfig::default();
        RunConfig {
            data: PathBuf::new(),
            domain: PathBuf::new(),
            config: PathBuf::new(),
            out: PathBuf::from("out"),
            epsilon: 1.0,
            delta: 1e-8,
            neighboring: Neighboring::Unbounded,
            seed: 0,
            alpha0: synth.alpha0,
            decay: synth.decay,
            iterations: synth.iterations,
            dup_ramp: synth.dup_ramp,
            convergence_tol: synth.convergence_tol,
            compress_budget_fraction: 0.1,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(Error::from)
    }

    pub fn synthesis_config(&self) -> SynthesisConfig {
        SynthesisConfig {
            alpha0: self.alpha0,
            decay: self.decay.clone(),
            iterations: self.iterations,
            dup_ramp: self.dup_ramp,
            seed: self.seed,
            convergence_tol: self.convergence_tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("data", &self.data), ("domain", &self.domain), ("config", &self.config)] {
            if p.as_os_str().is_empty() {
                return Err(Error::InvalidInput(format!("missing required path: {name}")));
            }
        }
        if !(0.0 < self.compress_budget_fraction && self.compress_budget_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "compress_budget_fraction must lie in (0, 1), got {}",
                self.compress_budget_fraction
            )));
        }
        self.synthesis_config().validate()
    }
}
