//! Line-delimited trace files.
//!
//! A trace is a header line followed by one event per line. Every line is a
//! JSON object `{"type": ..., "ts": ..., "payload": {...}}`; the header
//! carries `"schema"` instead of `"ts"`:
//!
//! ```text
//! {"type":"header","schema":"socialpulse-trace/1","payload":{"participant_id":"P1",...,"config":{...}}}
//! {"type":"wear","ts":0.0,"payload":{"worn":true}}
//! {"type":"recording","ts":90.0,"payload":{"frames":[{"scores":[[0,0.8]],"embedding":{"sparse":[[0,4.1]]}}]}}
//! {"type":"ground_truth","ts":600.0,"payload":{"start":600.0,"end":1200.0,"kind":"in_person"}}
//! {"type":"feedback","ts":1300.0,"payload":{"interaction_index":0,"label":"yes"}}
//! ```
//!
//! Scores are stored sparsely as `[class, score]` pairs. Unknown event types,
//! unknown fields and other schema versions are rejected.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::config::DetectorConfig;
use crate::error::TraceError;
use crate::types::{ClassScores, Embedding, FeedbackLabel, FrameAnalysis, RecordingWindow};

pub const TRACE_SCHEMA: &str = "socialpulse-trace/1";

/// Consecutive recordings within one wear period may sit this much closer
/// than a full duty-cycle period before the trace is rejected.
const SPACING_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMetadata {
    pub participant_id: String,
    /// Wall-clock instant of the session epoch, free-form (RFC 3339 is
    /// conventional). Never interpreted.
    #[serde(default)]
    pub session_epoch_wallclock: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Detector configuration the trace was produced for, cue set included.
    pub config: DetectorConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    #[default]
    InPerson,
    Virtual,
}

/// A true interaction, as logged by the participant or the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthInterval {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub kind: InteractionKind,
}

impl GroundTruthInterval {
    pub fn overlap(&self, start: f64, end: f64) -> f64 {
        (self.end.min(end) - self.start.max(start)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    WearStatus {
        ts: f64,
        worn: bool,
    },
    Recording(RecordingWindow),
    GroundTruth(GroundTruthInterval),
    /// Participant label for the `interaction_index`-th detection.
    Feedback {
        ts: f64,
        interaction_index: usize,
        label: FeedbackLabel,
    },
}

impl TraceEvent {
    pub fn ts(&self) -> f64 {
        match self {
            TraceEvent::WearStatus { ts, .. } | TraceEvent::Feedback { ts, .. } => *ts,
            TraceEvent::Recording(w) => w.rec_ts,
            TraceEvent::GroundTruth(g) => g.start,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub metadata: TraceMetadata,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn config(&self) -> &DetectorConfig {
        &self.metadata.config
    }

    pub fn recordings(&self) -> impl Iterator<Item = &RecordingWindow> {
        self.events.iter().filter_map(|e| match e {
            TraceEvent::Recording(w) => Some(w),
            _ => None,
        })
    }

    pub fn ground_truth(&self) -> Vec<GroundTruthInterval> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::GroundTruth(g) => Some(*g),
                _ => None,
            })
            .collect()
    }

    pub fn feedback(&self) -> Vec<(usize, FeedbackLabel)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                TraceEvent::Feedback {
                    interaction_index,
                    label,
                    ..
                } => Some((*interaction_index, *label)),
                _ => None,
            })
            .collect()
    }

    /// Fails unless `cfg` is exactly the configuration recorded in the trace.
    pub fn check_config(&self, cfg: &DetectorConfig) -> Result<(), TraceError> {
        let own = &self.metadata.config;
        if own == cfg {
            return Ok(());
        }
        let mut diff = vec![];
        macro_rules! cmp {
            ($($f:ident),*) => {$(
                if own.$f != cfg.$f {
                    diff.push(format!("{} (trace {:?}, detector {:?})", stringify!($f), own.$f, cfg.$f));
                }
            )*};
        }
        cmp!(
            interval_s,
            record_len_s,
            frame_len_s,
            pair_size,
            num_classes,
            embedding_dim,
            cue_class_ids,
            cue_threshold_pct,
            fs_threshold_pct
        );
        Err(TraceError::ConfigMismatch(diff.join(", ")))
    }

    /// Structural checks shared by every consumer of a trace: event order,
    /// wear transitions, frame shapes and duty-cycle spacing.
    pub fn validate(&self) -> Result<(), TraceError> {
        let cfg = &self.metadata.config;
        cfg.check()
            .map_err(|e| TraceError::ConfigMismatch(format!("invalid trace config: {e}")))?;
        let invalid = |index: usize, message: String| TraceError::Invalid { index, message };

        match self.events.first() {
            Some(TraceEvent::WearStatus { worn: true, .. }) | None => {}
            Some(_) => return Err(invalid(0, "first event must be a wear event with worn = true".into())),
        }

        let mut last_ts = f64::NEG_INFINITY;
        let mut worn = false;
        let mut last_rec: Option<f64> = None;
        for (index, event) in self.events.iter().enumerate() {
            let ts = event.ts();
            if !(ts.is_finite() && ts >= 0.0) {
                return Err(invalid(index, format!("bad timestamp {ts}")));
            }
            if ts < last_ts {
                return Err(invalid(index, format!("timestamp {ts} precedes {last_ts}")));
            }
            last_ts = ts;
            match event {
                TraceEvent::WearStatus { worn: w, .. } => {
                    if *w && !worn {
                        last_rec = None;
                    }
                    worn = *w;
                }
                TraceEvent::Recording(window) => {
                    if !worn {
                        return Err(invalid(index, "recording while the device is off-body".into()));
                    }
                    window
                        .validate(cfg)
                        .map_err(|source| TraceError::Frame { index, source })?;
                    if let Some(prev) = last_rec {
                        if window.rec_ts - prev < cfg.period_s() - SPACING_TOLERANCE_S {
                            return Err(invalid(
                                index,
                                format!(
                                    "recording at {} only {} s after the previous one; the duty cycle needs {} s",
                                    window.rec_ts,
                                    window.rec_ts - prev,
                                    cfg.period_s()
                                ),
                            ));
                        }
                    }
                    last_rec = Some(window.rec_ts);
                }
                TraceEvent::GroundTruth(g) => {
                    if g.end.is_nan() || g.end <= g.start {
                        return Err(invalid(index, "ground-truth interval must have end > start".into()));
                    }
                }
                TraceEvent::Feedback { .. } => {}
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = HeaderOut {
            kind: "header",
            schema: TRACE_SCHEMA,
            payload: &self.metadata,
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).unwrap();
        for event in &self.events {
            let line = match event {
                TraceEvent::WearStatus { ts, worn } => line("wear", *ts, &WearPayload { worn: *worn }),
                TraceEvent::Recording(w) => line(
                    "recording",
                    w.rec_ts,
                    &RecordingPayload {
                        frames: w.frames.iter().map(FrameRecord::from).collect(),
                    },
                ),
                TraceEvent::GroundTruth(g) => line("ground_truth", g.start, g),
                TraceEvent::Feedback {
                    ts,
                    interaction_index,
                    label,
                } => line(
                    "feedback",
                    *ts,
                    &FeedbackPayload {
                        interaction_index: *interaction_index,
                        label: *label,
                    },
                ),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());

        let (line_no, first) = lines.next().ok_or(TraceError::Parse {
            line: 1,
            message: "empty trace: missing header".into(),
        })?;
        let header: LineIn = parse_line(line_no, first)?;
        if header.kind != "header" {
            return Err(parse_err(line_no, format!("expected header, found {:?}", header.kind)));
        }
        match header.schema.as_deref() {
            Some(TRACE_SCHEMA) => {}
            other => {
                return Err(parse_err(
                    line_no,
                    format!("unsupported schema {other:?}, expected {TRACE_SCHEMA:?}"),
                ))
            }
        }
        let metadata: TraceMetadata = payload(line_no, &header)?;

        let mut events = vec![];
        for (line_no, text) in lines {
            let l: LineIn = parse_line(line_no, text)?;
            if l.schema.is_some() {
                return Err(parse_err(line_no, "schema is only allowed on the header".into()));
            }
            let ts = l
                .ts
                .ok_or_else(|| parse_err(line_no, format!("{} event without ts", l.kind)))?;
            let event = match l.kind.as_str() {
                "wear" => {
                    let p: WearPayload = payload(line_no, &l)?;
                    TraceEvent::WearStatus { ts, worn: p.worn }
                }
                "recording" => {
                    let p: RecordingPayload = payload(line_no, &l)?;
                    TraceEvent::Recording(RecordingWindow {
                        rec_ts: ts,
                        frames: p.frames.into_iter().map(FrameAnalysis::from).collect(),
                    })
                }
                "ground_truth" => {
                    let g: GroundTruthInterval = payload(line_no, &l)?;
                    if g.start != ts {
                        return Err(parse_err(line_no, "ground_truth ts must equal its start".into()));
                    }
                    TraceEvent::GroundTruth(g)
                }
                "feedback" => {
                    let p: FeedbackPayload = payload(line_no, &l)?;
                    TraceEvent::Feedback {
                        ts,
                        interaction_index: p.interaction_index,
                        label: p.label,
                    }
                }
                other => return Err(parse_err(line_no, format!("unknown event type {other:?}"))),
            };
            events.push(event);
        }
        Ok(Trace { metadata, events })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| TraceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TraceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_jsonl(&text)
    }
}

#[derive(Serialize)]
struct HeaderOut<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    schema: &'static str,
    payload: &'a TraceMetadata,
}

#[derive(Serialize)]
struct LineOut<'a, P> {
    #[serde(rename = "type")]
    kind: &'static str,
    ts: f64,
    payload: &'a P,
}

fn line<P: Serialize>(kind: &'static str, ts: f64, payload: &P) -> String {
    serde_json::to_string(&LineOut { kind, ts, payload }).expect("event serializes")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineIn<'a> {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    schema: Option<String>,
    #[serde(default)]
    ts: Option<f64>,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn parse_err(line: usize, message: String) -> TraceError {
    TraceError::Parse { line, message }
}

fn parse_line(line_no: usize, text: &str) -> Result<LineIn<'_>, TraceError> {
    serde_json::from_str(text).map_err(|e| parse_err(line_no, e.to_string()))
}

fn payload<'a, T: Deserialize<'a>>(line_no: usize, l: &LineIn<'a>) -> Result<T, TraceError> {
    serde_json::from_str(l.payload.get())
        .map_err(|e| parse_err(line_no, format!("{} payload: {e}", l.kind)))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WearPayload {
    worn: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackPayload {
    interaction_index: usize,
    label: FeedbackLabel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordingPayload {
    frames: Vec<FrameRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord {
    scores: Vec<(u32, f32)>,
    embedding: Embedding,
}

impl From<&FrameAnalysis> for FrameRecord {
    fn from(f: &FrameAnalysis) -> Self {
        Self {
            scores: f.scores.to_sparse(),
            embedding: f.embedding.clone(),
        }
    }
}

impl From<FrameRecord> for FrameAnalysis {
    fn from(r: FrameRecord) -> Self {
        Self {
            scores: ClassScores::Sparse(r.scores),
            embedding: r.embedding,
        }
    }
}
