//! Trace-driven simulation: file formats, synthetic trace generation,
//! streaming replay, the batch oracle and session metrics.

mod clock;
pub mod generate;
pub mod logs;
mod metrics;
mod oracle;
mod replay;
pub mod trace;

pub use clock::VirtualClock;
pub use generate::{generate_trace, ScenarioInterval, ScenarioSpec};
pub use metrics::{compute_metrics, metrics_from_parts, BoundaryError, DurationHistogram, SessionMetrics};
pub use oracle::brute_force_oracle;
pub use replay::{replay, ReplayOutcome};
pub use trace::{GroundTruthInterval, InteractionKind, Trace, TraceEvent, TraceMetadata};
