//! Configuration-driven experiment runner behind the `gtilde-control` binary.

pub mod config;
pub mod report;
mod run;

pub use config::{ChecksConfig, GridConfig, McConfig, RunConfig, Steps, DEFAULT_CONFIG};
pub use report::{write_report, Artifact, Artifacts, Manifest, ManifestEntry};
pub use run::{execute, exit_code, run_experiment, Cli, Command, Context, Outcome, TREE_PAYOFFS};
