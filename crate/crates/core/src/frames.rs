//! Per-recording cue screening.
//!
//! Consecutive frames are grouped into pairs, their class scores averaged
//! and the pair labeled by argmax. The share of pairs whose label is a
//! conversation cue gives the recording's cue percentage, and the member
//! embeddings of cue pairs are collected for the foreground-speech detector.

use crate::config::DetectorConfig;
use crate::types::{Embedding, RecordingWindow};

#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    /// 0-based ordinal within the recording.
    pub index: usize,
    pub mean_scores: Vec<f32>,
    pub label_class: usize,
    pub is_cue: bool,
    pub member_embeddings: Vec<Embedding>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordingAnalysis {
    pub pairs: Vec<FramePair>,
    /// Percentage of pairs labeled as a conversation cue.
    pub cue_pct: f64,
    /// Member embeddings of the cue pairs, in pair order.
    pub conv_embeddings: Vec<Embedding>,
}

impl RecordingAnalysis {
    pub fn cue_pairs(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_cue).count()
    }

    /// Whether this recording passes the cue gate. A percentage exactly at
    /// the threshold passes.
    pub fn is_cue_positive(&self, cfg: &DetectorConfig) -> bool {
        self.cue_pct >= cfg.cue_threshold_pct
    }
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Groups frames into non-overlapping runs of `pair_size`; a trailing
/// incomplete group is dropped.
pub fn pair_frames(window: &RecordingWindow, cfg: &DetectorConfig) -> Vec<FramePair> {
    let width = cfg.pair_size as f32;
    window
        .frames
        .chunks_exact(cfg.pair_size)
        .enumerate()
        .map(|(index, members)| {
            let mut mean_scores = vec![0.0f32; cfg.num_classes];
            for f in members {
                f.scores.accumulate(&mut mean_scores);
            }
            mean_scores.iter_mut().for_each(|s| *s /= width);
            let label_class = argmax(&mean_scores);
            FramePair {
                index,
                is_cue: cfg.is_cue(label_class),
                label_class,
                mean_scores,
                member_embeddings: members.iter().map(|f| f.embedding.clone()).collect(),
            }
        })
        .collect()
}

/// Labels every pair and computes the cue percentage. A recording with no
/// complete pair has a cue percentage of zero.
pub fn analyze_recording(window: &RecordingWindow, cfg: &DetectorConfig) -> RecordingAnalysis {
    let pairs = pair_frames(window, cfg);
    let cue = pairs.iter().filter(|p| p.is_cue).count();
    let cue_pct = if pairs.is_empty() {
        0.0
    } else {
        100.0 * cue as f64 / pairs.len() as f64
    };
    let conv_embeddings = pairs
        .iter()
        .filter(|p| p.is_cue)
        .flat_map(|p| p.member_embeddings.iter().cloned())
        .collect();
    RecordingAnalysis {
        pairs,
        cue_pct,
        conv_embeddings,
    }
}
