//! Library surface of the privtab CLI, so the pipeline is testable without
//! spawning the binary.

pub mod config;
pub mod pipeline;

pub use config::RunConfig;
pub use pipeline::{
    run_eval, run_indif, run_inspect, run_noise_plan, run_synth, EvalOptions, MarginalArchive,
    SynthArtifacts,
};
