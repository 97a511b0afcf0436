use crate::config::DetectorConfig;
use crate::error::TraceError;
use crate::frames::analyze_recording;
use crate::fsd::FsDetector;
use crate::fsm::InteractionFsm;
use crate::sim::clock::VirtualClock;
use crate::sim::metrics::{compute_metrics, SessionMetrics};
use crate::sim::trace::{Trace, TraceEvent};
use crate::types::Interaction;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub detections: Vec<Interaction>,
    pub metrics: SessionMetrics,
}

/// Streams a trace through the detector on a virtual clock.
///
/// `cfg` must match the configuration recorded in the trace. Ground truth
/// and feedback events do not reach the detector; they only feed the
/// metrics.
pub fn replay(
    trace: &Trace,
    fsd: &dyn FsDetector,
    cfg: &DetectorConfig,
) -> Result<ReplayOutcome, TraceError> {
    trace.check_config(cfg)?;
    trace.validate()?;
    if fsd.embedding_dim() != cfg.embedding_dim {
        return Err(TraceError::ConfigMismatch(format!(
            "embedding_dim (trace {}, detector model {})",
            cfg.embedding_dim,
            fsd.embedding_dim()
        )));
    }

    let mut fsm = InteractionFsm::new(cfg.clone());
    let mut clock = VirtualClock::default();
    let mut detections = vec![];
    for (index, event) in trace.events.iter().enumerate() {
        let fsm_err = |source| TraceError::Fsm { index, source };
        clock.advance_to(event.ts()).map_err(fsm_err)?;
        let out = match event {
            TraceEvent::WearStatus { ts, worn: true } => fsm.on_wear_restored(*ts),
            TraceEvent::WearStatus { ts, worn: false } => fsm.on_wear_removed(*ts),
            TraceEvent::Recording(window) => {
                fsm.on_recording(window.rec_ts, &analyze_recording(window, cfg), fsd)
            }
            TraceEvent::GroundTruth(_) | TraceEvent::Feedback { .. } => continue,
        }
        .map_err(fsm_err)?;
        detections.extend(out.interaction);
    }

    let metrics = compute_metrics(&detections, trace);
    Ok(ReplayOutcome {
        detections,
        metrics,
    })
}
