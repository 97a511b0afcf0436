//! Synthetic traces from scenario descriptions.
//!
//! Recordings follow the duty cycle: after the watch is put on, wait
//! `interval_s`, record `record_len_s`, repeat. A recording belongs to a
//! scenario interval when its start falls inside the interval. Each pair of
//! frames is made a conversation cue with probability `cue_density`. Among
//! the cue frames, `fs_density` of them (randomly rounded) get embeddings
//! the detector model classifies as foreground speech; every other frame
//! gets an embedding it rejects.
//!
//! Embeddings are one-hot along the model's largest-magnitude weight, scaled
//! so the logit clears the decision boundary by 2 to 6.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::DetectorConfig;
use crate::error::ScenarioError;
use crate::fsd::{FsDetector, LinearFsModel};
use crate::sim::trace::{GroundTruthInterval, InteractionKind, Trace, TraceEvent, TraceMetadata};
use crate::types::{ClassScores, Embedding, FrameAnalysis, RecordingWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioInterval {
    pub start: f64,
    pub end: f64,
    pub cue_density: f64,
    pub fs_density: f64,
    #[serde(default)]
    pub kind: InteractionKind,
}

/// An off-body period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Removal {
    pub at: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_participant")]
    pub participant_id: String,
    #[serde(default)]
    pub session_epoch_wallclock: Option<String>,
    /// The watch comes off for good at this time.
    pub session_len_s: f64,
    /// Cue density outside every interval.
    #[serde(default)]
    pub background_cue_density: f64,
    #[serde(default)]
    pub background_fs_density: f64,
    #[serde(default)]
    pub intervals: Vec<ScenarioInterval>,
    #[serde(default)]
    pub removals: Vec<Removal>,
}

fn default_participant() -> String {
    "P0".to_string()
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let spec: Self = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let density = |field: String, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ScenarioError::Density { field, value })
            }
        };
        if !(self.session_len_s.is_finite() && self.session_len_s > 0.0) {
            return Err(ScenarioError::Invalid("session_len_s must be positive".into()));
        }
        density("background_cue_density".into(), self.background_cue_density)?;
        density("background_fs_density".into(), self.background_fs_density)?;
        for (i, iv) in self.intervals.iter().enumerate() {
            density(format!("intervals[{i}].cue_density"), iv.cue_density)?;
            density(format!("intervals[{i}].fs_density"), iv.fs_density)?;
            if !(iv.start.is_finite() && iv.start >= 0.0 && iv.end > iv.start) {
                return Err(ScenarioError::Invalid(format!(
                    "intervals[{i}]: need 0 <= start < end"
                )));
            }
        }
        let mut removals = self.removals.clone();
        removals.sort_by(|a, b| a.at.total_cmp(&b.at));
        for (i, r) in self.removals.iter().enumerate() {
            if !(r.at.is_finite() && r.at >= 0.0 && r.duration > 0.0) {
                return Err(ScenarioError::Invalid(format!(
                    "removals[{i}]: need at >= 0 and duration > 0"
                )));
            }
        }
        for w in removals.windows(2) {
            if w[0].at + w[0].duration > w[1].at {
                return Err(ScenarioError::Invalid(format!(
                    "removal at {} overlaps removal at {}",
                    w[0].at, w[1].at
                )));
            }
        }
        Ok(())
    }

    /// Worn periods `[on, off)` within the session.
    fn wear_periods(&self) -> Vec<(f64, f64)> {
        let mut removals = self.removals.clone();
        removals.sort_by(|a, b| a.at.total_cmp(&b.at));
        let mut periods = vec![];
        let mut on = 0.0;
        for r in removals {
            if r.at >= self.session_len_s {
                break;
            }
            periods.push((on, r.at));
            on = r.at + r.duration;
        }
        if on < self.session_len_s {
            periods.push((on, self.session_len_s));
        }
        periods
    }

    fn densities_at(&self, ts: f64) -> (f64, f64) {
        self.intervals
            .iter()
            .find(|iv| iv.start <= ts && ts < iv.end)
            .map_or((self.background_cue_density, self.background_fs_density), |iv| {
                (iv.cue_density, iv.fs_density)
            })
    }
}

/// Makes one-hot embeddings that a linear model classifies as intended.
struct EmbeddingSteer<'a> {
    model: &'a LinearFsModel,
    axis: u32,
}

impl<'a> EmbeddingSteer<'a> {
    fn new(model: &'a LinearFsModel) -> Result<Self, ScenarioError> {
        let (axis, w) = model
            .weights()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .ok_or_else(|| ScenarioError::Model("model has no weights".into()))?;
        if *w == 0.0 {
            return Err(ScenarioError::Model("all weights are zero".into()));
        }
        Ok(Self {
            model,
            axis: axis as u32,
        })
    }

    fn make(&self, rng: &mut ChaCha8Rng, foreground: bool) -> Result<Embedding, ScenarioError> {
        let margin = rng.gen_range(2.0..6.0);
        let target = self.model.decision_logit() + if foreground { margin } else { -margin };
        let w = self.model.weights()[self.axis as usize];
        let value = ((target - self.model.bias()) / w) as f32;
        let e = Embedding::Sparse(vec![(self.axis, value)]);
        if !value.is_finite() || self.model.predict(&e) != foreground {
            return Err(ScenarioError::Model(format!(
                "cannot reach logit {target} along dimension {}",
                self.axis
            )));
        }
        Ok(e)
    }
}

/// `floor(x + u)` with `u` uniform in [0, 1): an unbiased integer rounding.
fn random_round(rng: &mut ChaCha8Rng, x: f64) -> usize {
    (x + rng.gen::<f64>()).floor() as usize
}

/// Builds a reproducible trace for `scenario`. The same scenario, seed,
/// config and model always produce the same trace.
pub fn generate_trace(
    scenario: &ScenarioSpec,
    seed: u64,
    cfg: &DetectorConfig,
    model: &LinearFsModel,
) -> Result<Trace, ScenarioError> {
    scenario.validate()?;
    cfg.check()
        .map_err(|e| ScenarioError::Invalid(format!("config: {e}")))?;
    model
        .check_config(cfg)
        .map_err(|e| ScenarioError::Model(e.to_string()))?;
    let steer = EmbeddingSteer::new(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cue_classes: Vec<u32> = cfg.cue_class_ids.iter().map(|c| *c as u32).collect();
    let other_classes: Vec<u32> = (0..cfg.num_classes as u32)
        .filter(|c| !cfg.is_cue(*c as usize))
        .collect();
    if other_classes.is_empty() {
        return Err(ScenarioError::Invalid(
            "every class is a cue; cannot make cue-negative frames".into(),
        ));
    }

    let mut events = vec![];

    let n_frames = cfg.frames_per_recording();
    let n_pairs = n_frames / cfg.pair_size;
    for (on, off) in scenario.wear_periods() {
        events.push(TraceEvent::WearStatus { ts: on, worn: true });
        for k in 0.. {
            let rec_ts = on + cfg.interval_s + k as f64 * cfg.period_s();
            if rec_ts + cfg.record_len_s > off {
                break;
            }
            let (cue_density, fs_density) = scenario.densities_at(rec_ts);

            let mut frames = Vec::with_capacity(n_frames);
            let mut cue_frames = vec![];
            for _ in 0..n_pairs {
                let cue = rng.gen_bool(cue_density);
                let pool = if cue { &cue_classes } else { &other_classes };
                let label = pool[rng.gen_range(0..pool.len())];
                for _ in 0..cfg.pair_size {
                    if cue {
                        cue_frames.push(frames.len());
                    }
                    frames.push(scored_frame(&mut rng, label, cfg.num_classes));
                }
            }
            while frames.len() < n_frames {
                let label = other_classes[rng.gen_range(0..other_classes.len())];
                frames.push(scored_frame(&mut rng, label, cfg.num_classes));
            }

            let mut foreground = vec![false; n_frames];
            let n_fs = random_round(&mut rng, fs_density * cue_frames.len() as f64)
                .min(cue_frames.len());
            for i in sample(&mut rng, cue_frames.len(), n_fs) {
                foreground[cue_frames[i]] = true;
            }
            let frames = frames
                .into_iter()
                .zip(foreground)
                .map(|(scores, fs)| {
                    Ok(FrameAnalysis {
                        scores,
                        embedding: steer.make(&mut rng, fs)?,
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            events.push(TraceEvent::Recording(RecordingWindow { rec_ts, frames }));
        }
        events.push(TraceEvent::WearStatus { ts: off, worn: false });
    }

    for iv in &scenario.intervals {
        events.push(TraceEvent::GroundTruth(GroundTruthInterval {
            start: iv.start,
            end: iv.end,
            kind: iv.kind,
        }));
    }
    // Stable: at equal times ground truth follows wear and recordings.
    events.sort_by(|a, b| a.ts().total_cmp(&b.ts()));

    Ok(Trace {
        metadata: TraceMetadata {
            participant_id: scenario.participant_id.clone(),
            session_epoch_wallclock: scenario.session_epoch_wallclock.clone(),
            seed: Some(seed),
            config: cfg.clone(),
        },
        events,
    })
}

/// Scores with `label` dominant (at least 0.5) and one weaker distractor
/// (below 0.45), so any pair sharing a label averages to that label.
fn scored_frame(rng: &mut ChaCha8Rng, label: u32, num_classes: usize) -> ClassScores {
    let mut entries = vec![(label, rng.gen_range(0.5f32..0.95))];
    if num_classes > 1 {
        let mut other = rng.gen_range(0..num_classes as u32 - 1);
        if other >= label {
            other += 1;
        }
        entries.push((other, rng.gen_range(0.0f32..0.45)));
    }
    entries.sort_by_key(|(c, _)| *c);
    ClassScores::Sparse(entries)
}

/// Density levels used for randomized scenarios.
pub const CUE_DENSITIES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const FS_DENSITIES: [f64; 5] = [0.0, 0.1, 0.15, 0.5, 1.0];

/// A random scenario mixing cue and foreground densities, background cues
/// and off-body periods. Intervals may abut and removals may cut through
/// them.
pub fn random_mixed_scenario(seed: u64, cfg: &DetectorConfig) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let period = cfg.period_s();
    let pick = |rng: &mut ChaCha8Rng, xs: &[f64]| xs[rng.gen_range(0..xs.len())];

    let mut intervals = vec![];
    let mut cursor = rng.gen_range(0.0..4.0 * period);
    for _ in 0..rng.gen_range(0..=6) {
        let start = cursor + if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..6.0 * period) };
        let end = start + rng.gen_range(0.3 * period..15.0 * period);
        intervals.push(ScenarioInterval {
            start: start.round(),
            end: end.round().max(start.round() + 1.0),
            cue_density: pick(&mut rng, &CUE_DENSITIES),
            fs_density: pick(&mut rng, &FS_DENSITIES),
            kind: if rng.gen_bool(0.3) {
                InteractionKind::Virtual
            } else {
                InteractionKind::InPerson
            },
        });
        cursor = end.round().max(start.round() + 1.0);
    }
    let session_len_s = (cursor + rng.gen_range(0.0..5.0 * period)).round().max(period);

    let mut removals = vec![];
    let mut at = 0.0;
    for _ in 0..rng.gen_range(0..=3) {
        at += rng.gen_range(0.5 * period..(0.5 * session_len_s).max(period));
        let duration = rng.gen_range(10.0..10.0 * period).round();
        if at >= session_len_s {
            break;
        }
        removals.push(Removal {
            at: at.round(),
            duration,
        });
        at = at.round() + duration;
    }

    ScenarioSpec {
        participant_id: format!("R{seed}"),
        session_epoch_wallclock: None,
        session_len_s,
        background_cue_density: pick(&mut rng, &[0.0, 0.0, 0.25, 0.5, 0.75]),
        background_fs_density: pick(&mut rng, &FS_DENSITIES),
        intervals,
        removals,
    }
}

/// A random scenario in which every interval is fully conversational with
/// only foreground speech, lasts at least one duty-cycle period and is
/// separated from its neighbours by at least one period. The watch stays on
/// until two periods after the last interval.
pub fn random_saturated_scenario(seed: u64, cfg: &DetectorConfig) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
    let period = cfg.period_s();
    let mut intervals = vec![];
    let mut cursor = rng.gen_range(0.0..3.0 * period).round();
    for i in 0..rng.gen_range(1..=6) {
        let gap = if i == 0 { 0.0 } else { period };
        let start = (cursor + gap + rng.gen_range(0.0..5.0 * period)).ceil();
        let end = (start + period + rng.gen_range(0.0..20.0 * period)).ceil();
        intervals.push(ScenarioInterval {
            start,
            end,
            cue_density: 1.0,
            fs_density: 1.0,
            kind: if i % 2 == 0 {
                InteractionKind::InPerson
            } else {
                InteractionKind::Virtual
            },
        });
        cursor = end;
    }
    ScenarioSpec {
        participant_id: format!("S{seed}"),
        session_epoch_wallclock: None,
        session_len_s: (cursor + 2.0 * period + rng.gen_range(0.0..3.0 * period)).ceil(),
        background_cue_density: 0.0,
        background_fs_density: 0.0,
        intervals,
        removals: vec![],
    }
}
