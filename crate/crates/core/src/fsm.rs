//! Duty-cycle interaction state machine.
//!
//! Each recording either sustains an interaction (enough of its pairs are
//! conversation cues) or ends it. Foreground speech is counted only on cue
//! recordings, while recorded time grows on every recording. When an
//! interaction ends, it is reported only if foreground speech covers at
//! least `fs_threshold_pct` of the recorded time:
//!
//! ```text
//! cue dropout at rec_ts:  end = rec_ts - interval_s + record_len_s
//! removal at ts:          end = start + floor((ts - start) / interval_s) * interval_s + record_len_s
//! ```
//!
//! Both closures fully reset the counters, emitted or not.

use crate::config::DetectorConfig;
use crate::error::FsmError;
use crate::frames::RecordingAnalysis;
use crate::fsd::FsDetector;
use crate::types::{CloseReason, Interaction, InteractionState};

#[derive(Debug, Clone, PartialEq)]
pub enum FsmEvent {
    RecordingDone {
        rec_ts: f64,
        analysis: RecordingAnalysis,
    },
    WearStatus {
        ts: f64,
        worn: bool,
    },
}

impl FsmEvent {
    pub fn ts(&self) -> f64 {
        match self {
            FsmEvent::RecordingDone { rec_ts, .. } => *rec_ts,
            FsmEvent::WearStatus { ts, .. } => *ts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsmOutput {
    pub interaction: Option<Interaction>,
    /// State after the event.
    pub state: InteractionState,
}

/// Streaming detector for one session. Events must be applied in
/// non-decreasing timestamp order.
#[derive(Debug, Clone)]
pub struct InteractionFsm {
    cfg: DetectorConfig,
    state: InteractionState,
    worn: bool,
    last_ts: Option<f64>,
}

impl InteractionFsm {
    /// Starts idle with the device worn.
    pub fn new(cfg: DetectorConfig) -> Self {
        Self::with_state(cfg, InteractionState::default())
    }

    /// Resumes from a snapshot.
    pub fn with_state(cfg: DetectorConfig, state: InteractionState) -> Self {
        Self {
            cfg,
            state,
            worn: true,
            last_ts: None,
        }
    }

    pub fn state(&self) -> InteractionState {
        self.state
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn is_worn(&self) -> bool {
        self.worn
    }

    pub fn apply(
        &mut self,
        event: &FsmEvent,
        fsd: &dyn FsDetector,
    ) -> Result<FsmOutput, FsmError> {
        match event {
            FsmEvent::RecordingDone { rec_ts, analysis } => {
                self.on_recording(*rec_ts, analysis, fsd)
            }
            FsmEvent::WearStatus { ts, worn: false } => self.on_wear_removed(*ts),
            FsmEvent::WearStatus { ts, worn: true } => self.on_wear_restored(*ts),
        }
    }

    fn advance_clock(&mut self, ts: f64) -> Result<(), FsmError> {
        match self.last_ts {
            Some(last) if ts < last => Err(FsmError::NonMonotonic { last, ts }),
            _ if !ts.is_finite() => Err(FsmError::NonMonotonic {
                last: self.last_ts.unwrap_or(0.0),
                ts,
            }),
            _ => {
                self.last_ts = Some(ts);
                Ok(())
            }
        }
    }

    fn output(&self, interaction: Option<Interaction>) -> FsmOutput {
        FsmOutput {
            interaction,
            state: self.state,
        }
    }

    /// Consumes one finished recording.
    ///
    /// On error the state is left untouched.
    pub fn on_recording(
        &mut self,
        rec_ts: f64,
        analysis: &RecordingAnalysis,
        fsd: &dyn FsDetector,
    ) -> Result<FsmOutput, FsmError> {
        if let Some(last) = self.last_ts {
            if rec_ts < last {
                return Err(FsmError::NonMonotonic { last, ts: rec_ts });
            }
        }
        if !self.worn {
            return Err(FsmError::RecordingWhileOffBody(rec_ts));
        }

        let cfg = &self.cfg;
        let mut next = self.state;
        next.recordings += 1;
        let mut emitted = None;

        if analysis.is_cue_positive(cfg) {
            let selected = analysis.conv_embeddings.len();
            if selected as f64 * cfg.frame_len_s > cfg.record_len_s * (1.0 + 1e-9) {
                return Err(FsmError::AnalysisExceedsRecording { frames: selected });
            }
            let labels = fsd.classify(&analysis.conv_embeddings)?;
            next.fs_frames += labels.iter().filter(|&&fs| fs).count() as u64;
            if !next.interact_on {
                next.interact_on = true;
                next.start_time = Some(rec_ts);
            }
        } else {
            let fs_pct = next.fs_pct(cfg);
            if let (true, Some(start)) = (next.interact_on, next.start_time) {
                if fs_pct >= cfg.fs_threshold_pct {
                    // The previous recording was the last one with cues.
                    let end = rec_ts - cfg.interval_s + cfg.record_len_s;
                    if end <= start {
                        return Err(FsmError::DegenerateInterval { start, end });
                    }
                    emitted = Some(Interaction {
                        start,
                        end,
                        fs_pct_at_close: fs_pct,
                        close_reason: CloseReason::CueDropout,
                    });
                }
            }
            next = InteractionState::default();
        }

        self.advance_clock(rec_ts)?;
        self.state = next;
        Ok(self.output(emitted))
    }

    /// Off-body finalization: closes an open interaction at the last
    /// duty-cycle boundary before `current_ts`.
    pub fn on_wear_removed(&mut self, current_ts: f64) -> Result<FsmOutput, FsmError> {
        self.advance_clock(current_ts)?;
        self.worn = false;
        let cfg = &self.cfg;
        let fs_pct = self.state.fs_pct(cfg);
        let mut emitted = None;
        if let (true, Some(start)) = (self.state.interact_on, self.state.start_time) {
            if fs_pct >= cfg.fs_threshold_pct {
                let past = ((current_ts - start) / cfg.interval_s).floor() * cfg.interval_s;
                let end = start + past + cfg.record_len_s;
                emitted = Some(Interaction {
                    start,
                    end,
                    fs_pct_at_close: fs_pct,
                    close_reason: CloseReason::OffBody,
                });
            }
        }
        self.state = InteractionState::default();
        Ok(self.output(emitted))
    }

    /// The watch is back on; detection resumes from idle.
    pub fn on_wear_restored(&mut self, ts: f64) -> Result<FsmOutput, FsmError> {
        self.advance_clock(ts)?;
        self.worn = true;
        Ok(self.output(None))
    }
}

/// Shortest `end - start` reachable through a cue dropout: one cue recording
/// at `t`, a cue-negative one at `t + interval_s + record_len_s`.
pub fn min_emitted_duration(cfg: &DetectorConfig) -> f64 {
    2.0 * cfg.record_len_s
}

/// Shortest `end - start` reachable through off-body finalization: removal
/// less than `interval_s` after the only cue recording.
pub fn min_off_body_duration(cfg: &DetectorConfig) -> f64 {
    cfg.record_len_s
}
