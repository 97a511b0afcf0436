//! On-watch social interaction detection, replayed deterministically.
//!
//! The detector samples audio on a duty cycle, screens each recording for
//! conversational cues, counts foreground speech from the wearer and infers
//! interaction boundaries. Here recordings arrive as pre-analyzed frames in
//! trace files and time is virtual, so every run is reproducible.
//!
//! Pipeline: [`frames::analyze_recording`] → [`fsd::FsDetector`] →
//! [`fsm::InteractionFsm`], driven end to end by [`sim::replay`].

pub mod config;
pub mod error;
pub mod frames;
pub mod fsd;
pub mod fsm;
pub mod report;
pub mod sim;
pub mod types;

pub use config::DetectorConfig;
pub use error::{ConfigError, FrameError, FsdError, FsmError, ScenarioError, TraceError};
pub use frames::{analyze_recording, pair_frames, FramePair, RecordingAnalysis};
pub use fsd::{FsDetector, LinearFsModel};
pub use fsm::{FsmEvent, FsmOutput, InteractionFsm};
pub use types::{
    ClassScores, CloseReason, Embedding, FeedbackLabel, FeedbackRecord, FrameAnalysis,
    Interaction, InteractionId, InteractionState, RecordingWindow,
};
