use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("record_len_s ({record_len_s}) must exceed one pair of frames ({pair_span_s})")]
    RecordTooShort { record_len_s: f64, pair_span_s: f64 },
    #[error("{name} must lie in (0, 100], got {value}")]
    PercentOutOfRange { name: &'static str, value: f64 },
    #[error("cue_class_ids must not be empty")]
    EmptyCueSet,
    #[error("cue id out of range: {id} >= num_classes ({num_classes})")]
    CueIdOutOfRange { id: u16, num_classes: usize },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
}

/// A recording window that does not fit the configured front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("recording has no frames")]
    Empty,
    #[error("negative or non-finite timestamp {0}")]
    BadTimestamp(f64),
    #[error("frame {frame}: dense scores have length {found}, expected {expected}")]
    ScoresLength {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}: class {class} is out of range")]
    ClassOutOfRange { frame: usize, class: u32 },
    #[error("frame {frame}: class {class} listed twice")]
    DuplicateClass { frame: usize, class: u32 },
    #[error("frame {frame}: score for class {class} is negative or non-finite")]
    BadScore { frame: usize, class: u32 },
    #[error("frame {frame}: embedding has dimension {found}, expected {expected}")]
    EmbeddingDim {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {frame}: embedding contains a non-finite value")]
    EmbeddingNonFinite { frame: usize },
    #[error("{frames} frames do not fit a {record_len_s} s recording")]
    TooManyFrames { frames: usize, record_len_s: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsdError {
    #[error("embedding {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding {index} contains a non-finite value")]
    NonFiniteInput { index: usize },
    #[error("empty data set")]
    EmptyData,
    #[error("degenerate training set: only label {0} present")]
    DegenerateTrainingSet(u8),
    #[error("evaluation data lacks class {0}")]
    MissingClass(u8),
    #[error("labels must be 0 or 1, got {label} at row {index}")]
    BadLabel { index: usize, label: u8 },
    #[error("model parameter {0} is not finite")]
    NonFiniteParameter(&'static str),
    #[error("threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("model has {found} weights, config expects embedding_dim {expected}")]
    ModelDimension { expected: usize, found: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FsmError {
    #[error("timestamp {ts} precedes previous event at {last}")]
    NonMonotonic { last: f64, ts: f64 },
    #[error("recording at {0} while the device is off-body")]
    RecordingWhileOffBody(f64),
    #[error("analysis selects {frames} frames, more than fit one recording")]
    AnalysisExceedsRecording { frames: usize },
    #[error("interaction end {end} does not follow start {start}")]
    DegenerateInterval { start: f64, end: f64 },
    #[error(transparent)]
    Fsd(#[from] FsdError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("event {index}: {message}")]
    Invalid { index: usize, message: String },
    #[error("event {index}: {source}")]
    Frame { index: usize, source: FrameError },
    #[error("event {index}: {source}")]
    Fsm { index: usize, source: FsmError },
    #[error("trace config does not match detector config: {0}")]
    ConfigMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{field} must lie in [0, 1], got {value}")]
    Density { field: String, value: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("model cannot steer embeddings: {0}")]
    Model(String),
}
