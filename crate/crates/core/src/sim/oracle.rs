//! Batch reference for the streaming detector.
//!
//! Works on the whole trace at once: label every recording, cut the
//! timeline at each removal, and read interactions off maximal runs of
//! cue-positive recordings. A run closed by a cue-negative recording has
//! recorded one extra recording's worth of audio; a run closed by a removal
//! ends on the last duty-cycle boundary; a run still open when the trace
//! ends is never reported.

use crate::error::TraceError;
use crate::fsd::FsDetector;
use crate::sim::trace::{Trace, TraceEvent};
use crate::types::{CloseReason, Interaction, RecordingWindow};

struct Labeled {
    rec_ts: f64,
    cue_positive: bool,
    fs_frames: u64,
}

enum Close {
    Dropout(f64),
    Removal(f64),
}

pub fn brute_force_oracle(trace: &Trace, fsd: &dyn FsDetector) -> Result<Vec<Interaction>, TraceError> {
    trace.validate()?;
    let cfg = trace.config();
    if fsd.embedding_dim() != cfg.embedding_dim {
        return Err(TraceError::ConfigMismatch(format!(
            "embedding_dim (trace {}, detector model {})",
            cfg.embedding_dim,
            fsd.embedding_dim()
        )));
    }

    let label = |w: &RecordingWindow| -> Labeled {
        let p = cfg.pair_size;
        let n_pairs = w.frames.len() / p;
        let mut cue_pairs = 0usize;
        let mut fs_frames = 0u64;
        for k in 0..n_pairs {
            let mut mean = vec![0.0f32; cfg.num_classes];
            for f in &w.frames[k * p..(k + 1) * p] {
                for (c, s) in f.scores.to_dense(cfg.num_classes).into_iter().enumerate() {
                    mean[c] += s;
                }
            }
            for m in &mut mean {
                *m /= p as f32;
            }
            let mut best = 0;
            for c in 1..mean.len() {
                if mean[c] > mean[best] {
                    best = c;
                }
            }
            if cfg.cue_class_ids.contains(&(best as u16)) {
                cue_pairs += 1;
                for f in &w.frames[k * p..(k + 1) * p] {
                    fs_frames += u64::from(fsd.predict(&f.embedding));
                }
            }
        }
        let cue_pct = if n_pairs == 0 {
            0.0
        } else {
            100.0 * cue_pairs as f64 / n_pairs as f64
        };
        Labeled {
            rec_ts: w.rec_ts,
            cue_positive: cue_pct >= cfg.cue_threshold_pct,
            fs_frames,
        }
    };

    // Worn segments, each with the removal that closed it (if any).
    let mut segments: Vec<(Vec<Labeled>, Option<f64>)> = vec![(vec![], None)];
    for event in &trace.events {
        match event {
            TraceEvent::Recording(w) => segments.last_mut().unwrap().0.push(label(w)),
            TraceEvent::WearStatus { ts, worn: false } => {
                segments.last_mut().unwrap().1 = Some(*ts);
                segments.push((vec![], None));
            }
            _ => {}
        }
    }

    let mut out = vec![];
    for (recs, removal) in &segments {
        let mut i = 0;
        while i < recs.len() {
            if !recs[i].cue_positive {
                i += 1;
                continue;
            }
            let mut j = i;
            while j < recs.len() && recs[j].cue_positive {
                j += 1;
            }
            let run = &recs[i..j];
            let close = match (recs.get(j), removal) {
                (Some(next), _) => Close::Dropout(next.rec_ts),
                (None, Some(at)) => Close::Removal(*at),
                (None, None) => break,
            };
            let fs_frames: u64 = run.iter().map(|r| r.fs_frames).sum();
            let recordings = run.len() as u64 + u64::from(matches!(close, Close::Dropout(_)));
            let n_fs = fs_frames as f64 * cfg.frame_len_s;
            let t_rec = recordings as f64 * cfg.record_len_s;
            let fs_pct = 100.0 * n_fs / t_rec;
            if fs_pct >= cfg.fs_threshold_pct {
                let start = run[0].rec_ts;
                let (end, close_reason) = match close {
                    Close::Dropout(ts) => (ts - cfg.interval_s + cfg.record_len_s, CloseReason::CueDropout),
                    Close::Removal(ts) => {
                        let cycles = ((ts - start) / cfg.interval_s).floor();
                        (start + cycles * cfg.interval_s + cfg.record_len_s, CloseReason::OffBody)
                    }
                };
                out.push(Interaction {
                    start,
                    end,
                    fs_pct_at_close: fs_pct,
                    close_reason,
                });
            }
            i = j + 1;
        }
    }
    Ok(out)
}
