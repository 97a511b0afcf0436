//! Detector constants and their validation.
//!
//! Every tunable of the duty-cycled detector lives in [`DetectorConfig`]. A
//! config is a plain value: construct it (or load it from a TOML key/value
//! file), pass it through [`DetectorConfig::validate`], and share copies
//! freely.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Default conversation-cue classes, as indices into the 521-class AudioSet
/// taxonomy emitted by the front-end audio model.
///
/// Speech, whispering, shouting, chatter, laughter, crying and clapping are
/// fixed members; the rest are speech-adjacent vocal classes.
pub const DEFAULT_CUE_CLASSES: [(u16, &str); 15] = [
    (0, "Speech"),
    (1, "Child speech, kid speaking"),
    (2, "Conversation"),
    (3, "Narration, monologue"),
    (6, "Shout"),
    (7, "Bellow"),
    (9, "Yell"),
    (12, "Whispering"),
    (13, "Laughter"),
    (15, "Giggle"),
    (18, "Chuckle, chortle"),
    (19, "Crying, sobbing"),
    (58, "Clapping"),
    (63, "Chatter"),
    (65, "Hubbub, speech noise, speech babble"),
];

/// All constants of the detection loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Wait between the end of one recording and the start of the next (s).
    pub interval_s: f64,
    /// Length of each duty-cycle recording (s).
    pub record_len_s: f64,
    /// Hop of the front-end analysis frames (s).
    pub frame_len_s: f64,
    /// Frames averaged per labeling decision.
    pub pair_size: usize,
    pub num_classes: usize,
    pub embedding_dim: usize,
    pub cue_class_ids: BTreeSet<u16>,
    /// A recording is cue-positive when this percentage of its pairs is a cue.
    pub cue_threshold_pct: f64,
    /// An interaction is emitted when foreground speech reaches this
    /// percentage of recorded time.
    pub fs_threshold_pct: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            interval_s: 90.0,
            record_len_s: 16.0,
            frame_len_s: 0.48,
            pair_size: 2,
            num_classes: 521,
            embedding_dim: 1024,
            cue_class_ids: DEFAULT_CUE_CLASSES.iter().map(|(id, _)| *id).collect(),
            cue_threshold_pct: 50.0,
            fs_threshold_pct: 15.0,
        }
    }
}

impl DetectorConfig {
    /// Checks every invariant and hands the config back unchanged.
    ///
    /// The first violated invariant is reported.
    pub fn validate(self) -> Result<Self, ConfigError> {
        self.check()?;
        Ok(self)
    }

    /// Borrowing form of [`validate`](Self::validate).
    pub fn check(&self) -> Result<(), ConfigError> {
        positive("interval_s", self.interval_s)?;
        positive("record_len_s", self.record_len_s)?;
        positive("frame_len_s", self.frame_len_s)?;
        if self.pair_size == 0 {
            return Err(ConfigError::NonPositive("pair_size"));
        }
        if self.num_classes == 0 {
            return Err(ConfigError::NonPositive("num_classes"));
        }
        if self.embedding_dim == 0 {
            return Err(ConfigError::NonPositive("embedding_dim"));
        }
        if self.record_len_s <= self.pair_size as f64 * self.frame_len_s {
            return Err(ConfigError::RecordTooShort {
                record_len_s: self.record_len_s,
                pair_span_s: self.pair_size as f64 * self.frame_len_s,
            });
        }
        percent("cue_threshold_pct", self.cue_threshold_pct)?;
        percent("fs_threshold_pct", self.fs_threshold_pct)?;
        if self.cue_class_ids.is_empty() {
            return Err(ConfigError::EmptyCueSet);
        }
        if let Some(&id) = self
            .cue_class_ids
            .iter()
            .find(|&&id| id as usize >= self.num_classes)
        {
            return Err(ConfigError::CueIdOutOfRange {
                id,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }

    pub fn is_cue(&self, class: usize) -> bool {
        u16::try_from(class).is_ok_and(|c| self.cue_class_ids.contains(&c))
    }

    /// Start-to-start spacing of consecutive recordings while worn.
    pub fn period_s(&self) -> f64 {
        self.interval_s + self.record_len_s
    }

    /// Number of analysis frames in one full recording.
    pub fn frames_per_recording(&self) -> usize {
        (self.record_len_s / self.frame_len_s).floor() as usize
    }

    /// Parses a TOML key/value document. Missing keys take their defaults;
    /// unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NonPositive(name))
    }
}

fn percent(name: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 && v <= 100.0 {
        Ok(())
    } else {
        Err(ConfigError::PercentOutOfRange { name, value: v })
    }
}
