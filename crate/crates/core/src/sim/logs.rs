//! Detection and feedback logs, one JSON object per line.
//!
//! ```text
//! {"session_id":"P1","index":0,"start":1000.0,"end":1032.0,"fs_pct_at_close":48.0,"close_reason":"cue_dropout"}
//! {"session_id":"P1","interaction_index":0,"label":"yes","label_ts":1100.0}
//! ```

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::TraceError;
use crate::sim::trace::{Trace, TraceEvent};
use crate::types::{CloseReason, FeedbackLabel, Interaction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionLogEntry {
    pub session_id: String,
    pub index: usize,
    pub start: f64,
    pub end: f64,
    pub fs_pct_at_close: f64,
    pub close_reason: CloseReason,
}

impl DetectionLogEntry {
    pub fn interaction(&self) -> Interaction {
        Interaction {
            start: self.start,
            end: self.end,
            fs_pct_at_close: self.fs_pct_at_close,
            close_reason: self.close_reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackLogEntry {
    pub session_id: String,
    pub interaction_index: usize,
    pub label: FeedbackLabel,
    pub label_ts: f64,
}

pub fn detection_entries(session_id: &str, detections: &[Interaction]) -> Vec<DetectionLogEntry> {
    detections
        .iter()
        .enumerate()
        .map(|(index, d)| DetectionLogEntry {
            session_id: session_id.to_string(),
            index,
            start: d.start,
            end: d.end,
            fs_pct_at_close: d.fs_pct_at_close,
            close_reason: d.close_reason,
        })
        .collect()
}

/// Feedback events embedded in a trace, as log entries for `session_id`.
pub fn feedback_entries(session_id: &str, trace: &Trace) -> Vec<FeedbackLogEntry> {
    trace
        .events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Feedback {
                ts,
                interaction_index,
                label,
            } => Some(FeedbackLogEntry {
                session_id: session_id.to_string(),
                interaction_index: *interaction_index,
                label: *label,
                label_ts: *ts,
            }),
            _ => None,
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(entries: &[T]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("log entry serializes"));
        out.push('\n');
    }
    out
}

/// Parses a log; blank lines are skipped, line numbers are 1-based.
pub fn from_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, TraceError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TraceError::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, TraceError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    from_jsonl(&text)
}

pub fn write_jsonl<T: Serialize>(path: impl AsRef<Path>, entries: &[T]) -> Result<(), TraceError> {
    let path = path.as_ref();
    std::fs::write(path, to_jsonl(entries)).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection_log_round_trip() {
        let d = Interaction {
            start: 1000.0,
            end: 1032.0,
            fs_pct_at_close: 100.0 * (10.0 * 0.48) / 32.0,
            close_reason: CloseReason::CueDropout,
        };
        let entries = detection_entries("P1", &[d, d]);
        let text = to_jsonl(&entries);
        assert!(text.starts_with(
            r#"{"session_id":"P1","index":0,"start":1000.0,"end":1032.0,"fs_pct_at_close":15.0,"close_reason":"cue_dropout"}"#
        ));
        let back: Vec<DetectionLogEntry> = from_jsonl(&text).unwrap();
        assert_eq!(back, entries);
        assert_eq!(back[1].interaction(), d);
    }

    #[test]
    fn feedback_log_rejects_bad_labels_with_line() {
        let text = "{\"session_id\":\"P1\",\"interaction_index\":0,\"label\":\"yes\",\"label_ts\":5.0}\n\n{\"session_id\":\"P1\",\"interaction_index\":1,\"label\":\"sure\",\"label_ts\":6.0}\n";
        match from_jsonl::<FeedbackLogEntry>(text).unwrap_err() {
            TraceError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other}"),
        }
    }
}
