//! Scenario files, trial orchestration, scoring and traces.

pub mod batch;
pub mod metrics;
pub mod runner;
pub mod scenario;
pub mod trace;

pub use batch::{message_length_sweep, run_batch, BatchOutput, Motion, SweepRow};
pub use metrics::{attribution_window_ms, score_trial, ToggleRecord, TrialResult};
pub use runner::{run_scenario, Pipeline, RunOutput};
pub use scenario::{load_scenario, parse_scenario, Expectations, PipelineConfig, ScenarioFile};
pub use trace::{Trace, TraceEvent, TraceKind};
