//! Value types shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::error::FrameError;

/// Per-frame class scores from the front-end model.
///
/// Traces store only the nonzero classes; both forms compare equal when
/// their dense views agree.
#[derive(Debug, Clone)]
pub enum ClassScores {
    Dense(Vec<f32>),
    /// `(class, score)` entries; absent classes score zero.
    Sparse(Vec<(u32, f32)>),
}

impl ClassScores {
    pub fn to_dense(&self, num_classes: usize) -> Vec<f32> {
        let mut out = vec![0.0; num_classes];
        self.accumulate(&mut out);
        out
    }

    /// Adds these scores into `acc` element-wise. Out-of-range sparse
    /// entries are ignored; validation rejects them earlier.
    pub fn accumulate(&self, acc: &mut [f32]) {
        match self {
            ClassScores::Dense(v) => acc.iter_mut().zip(v).for_each(|(a, s)| *a += s),
            ClassScores::Sparse(entries) => {
                for &(c, s) in entries {
                    if let Some(a) = acc.get_mut(c as usize) {
                        *a += s;
                    }
                }
            }
        }
    }

    pub fn get(&self, class: usize) -> f32 {
        match self {
            ClassScores::Dense(v) => v.get(class).copied().unwrap_or(0.0),
            ClassScores::Sparse(entries) => entries
                .iter()
                .find(|(c, _)| *c as usize == class)
                .map_or(0.0, |&(_, s)| s),
        }
    }

    /// Nonzero entries in class order.
    pub fn to_sparse(&self) -> Vec<(u32, f32)> {
        let mut out: Vec<(u32, f32)> = match self {
            ClassScores::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, s)| **s != 0.0)
                .map(|(c, s)| (c as u32, *s))
                .collect(),
            ClassScores::Sparse(entries) => {
                entries.iter().copied().filter(|(_, s)| *s != 0.0).collect()
            }
        };
        out.sort_by_key(|(c, _)| *c);
        out
    }

    fn validate(&self, frame: usize, num_classes: usize) -> Result<(), FrameError> {
        match self {
            ClassScores::Dense(v) => {
                if v.len() != num_classes {
                    return Err(FrameError::ScoresLength {
                        frame,
                        expected: num_classes,
                        found: v.len(),
                    });
                }
                if let Some(c) = v.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
                    return Err(FrameError::BadScore {
                        frame,
                        class: c as u32,
                    });
                }
            }
            ClassScores::Sparse(entries) => {
                let mut seen = vec![false; num_classes];
                for &(c, s) in entries {
                    let slot = seen
                        .get_mut(c as usize)
                        .ok_or(FrameError::ClassOutOfRange { frame, class: c })?;
                    if std::mem::replace(slot, true) {
                        return Err(FrameError::DuplicateClass { frame, class: c });
                    }
                    if !(s.is_finite() && s >= 0.0) {
                        return Err(FrameError::BadScore { frame, class: c });
                    }
                }
            }
        }
        Ok(())
    }
}

impl PartialEq for ClassScores {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ClassScores::Dense(a), ClassScores::Dense(b)) => a == b,
            (ClassScores::Dense(d), s @ ClassScores::Sparse(_))
            | (s @ ClassScores::Sparse(_), ClassScores::Dense(d)) => {
                s.to_sparse().iter().all(|&(c, _)| (c as usize) < d.len())
                    && s.to_dense(d.len()) == *d
            }
            (a, b) => a.to_sparse() == b.to_sparse(),
        }
    }
}

/// A frame embedding. Synthetic traces use the sparse form to stay small.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Dense(Vec<f32>),
    /// `(dimension, value)` entries; absent dimensions are zero.
    Sparse(Vec<(u32, f32)>),
}

impl Embedding {
    /// Whether the dense view has exactly `dim` entries.
    pub fn fits(&self, dim: usize) -> bool {
        match self {
            Embedding::Dense(v) => v.len() == dim,
            Embedding::Sparse(entries) => entries.iter().all(|(i, _)| (*i as usize) < dim),
        }
    }

    /// Reported dimension for error messages.
    pub fn apparent_dim(&self) -> usize {
        match self {
            Embedding::Dense(v) => v.len(),
            Embedding::Sparse(entries) => entries
                .iter()
                .map(|(i, _)| *i as usize + 1)
                .max()
                .unwrap_or(0),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Embedding::Dense(v) => v.iter().all(|x| x.is_finite()),
            Embedding::Sparse(entries) => entries.iter().all(|(_, x)| x.is_finite()),
        }
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        match self {
            Embedding::Dense(v) => v.iter().zip(weights).map(|(x, w)| *x as f64 * w).sum(),
            Embedding::Sparse(entries) => entries
                .iter()
                .map(|&(i, x)| x as f64 * weights[i as usize])
                .sum(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f32> {
        match self {
            Embedding::Dense(v) => v.clone(),
            Embedding::Sparse(entries) => {
                let mut out = vec![0.0; dim];
                for &(i, x) in entries {
                    out[i as usize] += x;
                }
                out
            }
        }
    }
}

/// Front-end output for one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub scores: ClassScores,
    pub embedding: Embedding,
}

/// One duty-cycle capture.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingWindow {
    /// Start of the recording, seconds since the session epoch.
    pub rec_ts: f64,
    pub frames: Vec<FrameAnalysis>,
}

impl RecordingWindow {
    pub fn validate(&self, cfg: &DetectorConfig) -> Result<(), FrameError> {
        if !(self.rec_ts.is_finite() && self.rec_ts >= 0.0) {
            return Err(FrameError::BadTimestamp(self.rec_ts));
        }
        if self.frames.is_empty() {
            return Err(FrameError::Empty);
        }
        let n = self.frames.len();
        let paired = n - n % cfg.pair_size;
        // Tolerance of one frame overall, but the frames that get paired
        // must fit the recording or foreground time could exceed it.
        let slack = 1e-9 * cfg.record_len_s;
        if n as f64 * cfg.frame_len_s > cfg.record_len_s + cfg.frame_len_s + slack
            || paired as f64 * cfg.frame_len_s > cfg.record_len_s + slack
        {
            return Err(FrameError::TooManyFrames {
                frames: n,
                record_len_s: cfg.record_len_s,
            });
        }
        for (i, f) in self.frames.iter().enumerate() {
            f.scores.validate(i, cfg.num_classes)?;
            if !f.embedding.fits(cfg.embedding_dim) {
                return Err(FrameError::EmbeddingDim {
                    frame: i,
                    expected: cfg.embedding_dim,
                    found: f.embedding.apparent_dim(),
                });
            }
            if !f.embedding.is_finite() {
                return Err(FrameError::EmbeddingNonFinite { frame: i });
            }
        }
        Ok(())
    }
}

/// Mutable variables of the detection loop.
///
/// Foreground speech and recorded time are kept as integer counts (frames
/// and recordings) so that the derived seconds and percentages are exact
/// functions of the event history.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InteractionState {
    pub interact_on: bool,
    pub start_time: Option<f64>,
    /// Frames classified as foreground speech since the last reset.
    pub fs_frames: u64,
    /// Recordings taken since the last reset.
    pub recordings: u64,
}

impl InteractionState {
    /// Foreground speech accumulated since the last reset, in seconds.
    pub fn n_fs_s(&self, cfg: &DetectorConfig) -> f64 {
        self.fs_frames as f64 * cfg.frame_len_s
    }

    /// Audio recorded since the last reset, in seconds.
    pub fn t_rec_s(&self, cfg: &DetectorConfig) -> f64 {
        self.recordings as f64 * cfg.record_len_s
    }

    /// Percentage of recorded time classified as foreground speech; zero when
    /// nothing has been recorded.
    pub fn fs_pct(&self, cfg: &DetectorConfig) -> f64 {
        fs_percentage(self.n_fs_s(cfg), self.t_rec_s(cfg))
    }

    pub fn is_reset(&self) -> bool {
        *self == Self::default()
    }
}

/// `100 * n_fs / t_rec`, defined as zero for an empty denominator.
pub fn fs_percentage(n_fs_s: f64, t_rec_s: f64) -> f64 {
    if t_rec_s > 0.0 {
        100.0 * n_fs_s / t_rec_s
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseReason {
    /// A cue-negative recording ended the interaction.
    CueDropout,
    /// The watch was taken off.
    OffBody,
}

impl fmt::Display for CloseReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloseReason::CueDropout => "cue_dropout",
            CloseReason::OffBody => "off_body",
        })
    }
}

/// A detected interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub start: f64,
    pub end: f64,
    /// Foreground-speech percentage at the moment the interaction closed.
    pub fs_pct_at_close: f64,
    pub close_reason: CloseReason,
}

impl Interaction {
    pub fn duration_s(&self) -> f64 {
        self.end - self.start
    }
}

/// Participant response to a detection prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackLabel {
    Yes,
    No,
    Maybe,
}

impl FeedbackLabel {
    pub const ALL: [FeedbackLabel; 3] = [FeedbackLabel::Yes, FeedbackLabel::No, FeedbackLabel::Maybe];

    pub fn as_str(&self) -> &'static str {
        match self {
            FeedbackLabel::Yes => "yes",
            FeedbackLabel::No => "no",
            FeedbackLabel::Maybe => "maybe",
        }
    }
}

impl fmt::Display for FeedbackLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "yes" => Ok(FeedbackLabel::Yes),
            "no" => Ok(FeedbackLabel::No),
            "maybe" => Ok(FeedbackLabel::Maybe),
            other => Err(format!("unknown feedback label {other:?}")),
        }
    }
}

/// Identifies the n-th detection of a session.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InteractionId {
    pub session_id: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub interaction_id: InteractionId,
    pub label: FeedbackLabel,
    pub label_ts: f64,
}
