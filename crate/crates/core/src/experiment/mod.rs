//! Config-driven experiment runner and artifact store.
//!
//! An experiment is a TOML file (strict: unknown keys rejected) naming a job
//! kind plus the sections it needs. Running one creates a fresh directory
//! `<out>/<kind>-<timestamp>-<confighash>/` holding every artifact and a
//! `run_record.json` with a sha256 manifest; reruns with identical config
//! and seed reproduce identical artifact bytes.

mod config;
mod record;
mod runner;

pub use config::{
    DatasetConfig, ExperimentConfig, JobKind, MeshConfig, ModelConfig, Patch2dSection,
    ProbeConfig, SceneConfig, SignalSection, SweepLight, SweepSection, SyntheticDataset,
    TextureConfig, TrainSection, ViewConfig,
};
pub use record::{sha256_hex, RunRecord, RunWriter};
pub use runner::{run_experiment, write_report, CliOverrides};
