//! Config-driven experiments, parameter sweeps and reports.

mod config;
mod fit;
mod run;
mod sweep;
mod verify;

use sha2::{Digest, Sha256};

pub use config::{
    Assertions, AttackConfig, ExperimentConfig, JOrder, OutputConfig, OutputFormat, SweepGrid,
    Tolerances, WeightSpec,
};
pub use fit::{fit_bound, BoundFit, FitPoint};
pub use run::{
    recheck_report, run_experiment, select_inputs, write_atomic, Aggregates, AssertionResult,
    ExperimentReport, Leakage, ProtocolSummary, ToolInfo, SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION,
};
pub use sweep::{analyze_point, nine_of_ten, ChannelFidelity, LeakagePoint, NineOfTen, StepTwo};
pub use verify::{verify_family, Check};

/// Seed for a named sub-task, so that adding a task never shifts the
/// random streams of the others.
pub fn task_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}
