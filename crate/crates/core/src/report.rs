//! Cross-session summaries of detections and participant feedback.
//!
//! Two accuracies are reported and kept apart: the aggregate one pools every
//! label (`yes / labeled` over all sessions), the per-participant one
//! averages each session's own accuracy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::sim::{metrics_from_parts, BoundaryError, DurationHistogram, GroundTruthInterval, SessionMetrics};
use crate::types::{FeedbackLabel, Interaction};

/// One session's inputs. `ground_truth` is `None` when no trace is known.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionInput {
    pub session_id: String,
    pub detections: Vec<Interaction>,
    pub feedback: Vec<(usize, FeedbackLabel)>,
    pub ground_truth: Option<Vec<GroundTruthInterval>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionRow {
    pub session_id: String,
    pub detections: usize,
    pub yes: usize,
    pub no: usize,
    pub maybe: usize,
    pub accuracy_pct: Option<f64>,
    pub recall: Option<f64>,
}

/// Five-number summary with type-7 (linear interpolation) quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Values below 50%.
    pub below_50: usize,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            n: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
            below_50: v.iter().filter(|x| **x < 50.0).count(),
        })
    }
}

/// Type-7 quantile of sorted, nonempty data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and sample standard deviation (n - 1). The deviation is `None` for
/// fewer than two values.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1)
        .then(|| (values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionBoundary {
    pub session_id: String,
    #[serde(flatten)]
    pub error: BoundaryError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub sessions: Vec<SessionRow>,
    #[serde(skip)]
    pub metrics: Vec<SessionMetrics>,
    pub total_detections: usize,
    pub total_labeled: usize,
    pub aggregate_accuracy_pct: Option<f64>,
    pub per_participant_mean_pct: Option<f64>,
    pub per_participant_sd_pct: Option<f64>,
    pub duration_histogram: DurationHistogram,
    pub boundary_deltas: Vec<SessionBoundary>,
    pub fs_pct_by_outcome: BTreeMap<FeedbackLabel, Quartiles>,
    pub warnings: Vec<String>,
}

impl ReportBundle {
    /// Builds the report. Sessions sharing an id are merged, detections and
    /// feedback indices concatenated in input order.
    pub fn build(inputs: &[SessionInput]) -> Self {
        let mut merged: BTreeMap<&str, SessionInput> = BTreeMap::new();
        for s in inputs {
            let m = merged.entry(&s.session_id).or_insert_with(|| SessionInput {
                session_id: s.session_id.clone(),
                detections: vec![],
                feedback: vec![],
                ground_truth: None,
            });
            let offset = m.detections.len();
            m.detections.extend_from_slice(&s.detections);
            m.feedback
                .extend(s.feedback.iter().map(|&(i, l)| (i + offset, l)));
            if let Some(gt) = &s.ground_truth {
                m.ground_truth.get_or_insert_with(Vec::new).extend_from_slice(gt);
            }
        }

        let mut warnings = vec![];
        let mut sessions = vec![];
        let mut metrics = vec![];
        let mut boundary_deltas = vec![];
        let mut histogram = DurationHistogram::default();
        let mut by_outcome: BTreeMap<FeedbackLabel, Vec<f64>> = BTreeMap::new();
        let (mut yes_total, mut labeled_total, mut detections_total) = (0, 0, 0);

        for s in merged.values() {
            let gt = s.ground_truth.as_deref().unwrap_or(&[]);
            let m = metrics_from_parts(&s.detections, gt, &s.feedback);
            if !m.dangling_feedback.is_empty() {
                warnings.push(format!(
                    "session {}: feedback for missing detections {:?} ignored",
                    s.session_id, m.dangling_feedback
                ));
            }
            let yes = m.count(FeedbackLabel::Yes);
            yes_total += yes;
            labeled_total += m.labels.len();
            detections_total += s.detections.len();
            histogram.merge(&m.duration_histogram);
            for (label, v) in &m.fs_pct_by_outcome {
                by_outcome.entry(*label).or_default().extend_from_slice(v);
            }
            boundary_deltas.extend(m.boundary_errors.iter().map(|e| SessionBoundary {
                session_id: s.session_id.clone(),
                error: *e,
            }));
            sessions.push(SessionRow {
                session_id: s.session_id.clone(),
                detections: s.detections.len(),
                yes,
                no: m.count(FeedbackLabel::No),
                maybe: m.count(FeedbackLabel::Maybe),
                accuracy_pct: m.accuracy_pct,
                recall: s.ground_truth.as_ref().and(m.recall),
            });
            metrics.push(m);
        }

        let per_session: Vec<f64> = sessions.iter().filter_map(|r| r.accuracy_pct).collect();
        let (per_participant_mean_pct, per_participant_sd_pct) = mean_sd(&per_session);

        Self {
            sessions,
            metrics,
            total_detections: detections_total,
            total_labeled: labeled_total,
            aggregate_accuracy_pct: (labeled_total > 0)
                .then(|| 100.0 * yes_total as f64 / labeled_total as f64),
            per_participant_mean_pct,
            per_participant_sd_pct,
            duration_histogram: histogram,
            boundary_deltas,
            fs_pct_by_outcome: by_outcome
                .into_iter()
                .filter_map(|(k, v)| Quartiles::of(&v).map(|q| (k, q)))
                .collect(),
            warnings,
        }
    }

    /// Plain-text tables. Columns without data are left out.
    pub fn render_text(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
        let pct = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}%"));
        let has_feedback = self.total_labeled > 0;
        let mut out = String::new();

        let _ = writeln!(out, "Per-participant accuracy");
        if has_feedback {
            let _ = writeln!(
                out,
                "{:<16} {:>10} {:>5} {:>5} {:>6} {:>10} {:>7}",
                "session", "detections", "yes", "no", "maybe", "accuracy%", "recall"
            );
        } else {
            let _ = writeln!(out, "{:<16} {:>10} {:>7}", "session", "detections", "recall");
        }
        for r in &self.sessions {
            if has_feedback {
                let _ = writeln!(
                    out,
                    "{:<16} {:>10} {:>5} {:>5} {:>6} {:>10} {:>7}",
                    r.session_id,
                    r.detections,
                    r.yes,
                    r.no,
                    r.maybe,
                    opt(r.accuracy_pct),
                    opt(r.recall)
                );
            } else {
                let _ = writeln!(out, "{:<16} {:>10} {:>7}", r.session_id, r.detections, opt(r.recall));
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Detections: {}", self.total_detections);
        if has_feedback {
            let _ = writeln!(
                out,
                "Aggregate accuracy: {} (N = {} of {} labeled)",
                pct(self.aggregate_accuracy_pct),
                self.sessions.iter().map(|r| r.yes).sum::<usize>(),
                self.total_labeled
            );
            let _ = writeln!(
                out,
                "Per-participant accuracy: mean {}, SD {}",
                pct(self.per_participant_mean_pct),
                pct(self.per_participant_sd_pct)
            );
        }

        let h = &self.duration_histogram;
        let _ = writeln!(out);
        let _ = writeln!(out, "Durations");
        let _ = writeln!(out, "  < 1 min   {}", h.under_1_min);
        let _ = writeln!(out, "  1-2 min   {}", h.from_1_to_2_min);
        let _ = writeln!(out, "  >= 2 min  {}", h.at_least_2_min);

        if !self.boundary_deltas.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "Boundary deltas (detected - logged, s)");
            let _ = writeln!(out, "{:<16} {:>9} {:>9} {:>10} {:>10}", "session", "detection", "truth", "start", "end");
            for b in &self.boundary_deltas {
                let _ = writeln!(
                    out,
                    "{:<16} {:>9} {:>9} {:>10.2} {:>10.2}",
                    b.session_id, b.error.detection, b.error.ground_truth, b.error.start_delta_s, b.error.end_delta_s
                );
            }
        }

        if !self.fs_pct_by_outcome.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "Foreground speech % by outcome");
            let _ = writeln!(
                out,
                "{:<6} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6}",
                "label", "n", "min", "q1", "median", "q3", "max", "<50%"
            );
            for (label, q) in &self.fs_pct_by_outcome {
                let _ = writeln!(
                    out,
                    "{:<6} {:>5} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>6}",
                    label.as_str(),
                    q.n,
                    q.min,
                    q.q1,
                    q.median,
                    q.q3,
                    q.max,
                    q.below_50
                );
            }
        }

        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}
