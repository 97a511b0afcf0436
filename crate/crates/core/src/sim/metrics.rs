use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::trace::{GroundTruthInterval, Trace};
use crate::types::{FeedbackLabel, Interaction};

/// Detection minus ground truth, per boundary. Positive means the detector
/// was late.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryError {
    pub detection: usize,
    pub ground_truth: usize,
    pub start_delta_s: f64,
    pub end_delta_s: f64,
}

/// Detection durations in three buckets: under one minute, one to two
/// minutes, two minutes or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DurationHistogram {
    pub under_1_min: usize,
    pub from_1_to_2_min: usize,
    pub at_least_2_min: usize,
}

impl DurationHistogram {
    pub fn add(&mut self, duration_s: f64) {
        if duration_s < 60.0 {
            self.under_1_min += 1;
        } else if duration_s < 120.0 {
            self.from_1_to_2_min += 1;
        } else {
            self.at_least_2_min += 1;
        }
    }

    pub fn from_detections(detections: &[Interaction]) -> Self {
        let mut h = Self::default();
        for d in detections {
            h.add(d.duration_s());
        }
        h
    }

    pub fn merge(&mut self, other: &Self) {
        self.under_1_min += other.under_1_min;
        self.from_1_to_2_min += other.from_1_to_2_min;
        self.at_least_2_min += other.at_least_2_min;
    }

    pub fn total(&self) -> usize {
        self.under_1_min + self.from_1_to_2_min + self.at_least_2_min
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub detections: Vec<Interaction>,
    /// Label per detection index; the last label given for a detection wins.
    pub labels: BTreeMap<usize, FeedbackLabel>,
    /// `100 * yes / labeled`, absent without feedback.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maybe_pct: Option<f64>,
    /// Share of ground-truth intervals overlapped by a detection, absent
    /// without ground truth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    pub boundary_errors: Vec<BoundaryError>,
    /// `fs_pct_at_close` of labeled detections, by label.
    pub fs_pct_by_outcome: BTreeMap<FeedbackLabel, Vec<f64>>,
    pub duration_histogram: DurationHistogram,
    /// Feedback entries naming a detection that does not exist.
    pub dangling_feedback: Vec<usize>,
}

impl SessionMetrics {
    pub fn count(&self, label: FeedbackLabel) -> usize {
        self.labels.values().filter(|l| **l == label).count()
    }
}

pub fn compute_metrics(detections: &[Interaction], trace: &Trace) -> SessionMetrics {
    metrics_from_parts(detections, &trace.ground_truth(), &trace.feedback())
}

/// Ground-truth interval overlapping `d` the most; ties go to the earlier
/// interval.
fn best_match(d: &Interaction, gt: &[GroundTruthInterval]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, g) in gt.iter().enumerate() {
        let o = g.overlap(d.start, d.end);
        if o <= 0.0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bo)) => o > bo || (o == bo && g.start < gt[b].start),
        };
        if better {
            best = Some((i, o));
        }
    }
    best.map(|(i, _)| i)
}

pub fn metrics_from_parts(
    detections: &[Interaction],
    gt: &[GroundTruthInterval],
    feedback: &[(usize, FeedbackLabel)],
) -> SessionMetrics {
    let mut labels = BTreeMap::new();
    let mut dangling_feedback = vec![];
    for &(index, label) in feedback {
        if index < detections.len() {
            labels.insert(index, label);
        } else {
            dangling_feedback.push(index);
        }
    }

    let labeled = labels.len();
    let pct = |label| {
        (labeled > 0).then(|| {
            100.0 * labels.values().filter(|l| **l == label).count() as f64 / labeled as f64
        })
    };
    let accuracy_pct = pct(FeedbackLabel::Yes);
    let maybe_pct = pct(FeedbackLabel::Maybe);

    let recall = (!gt.is_empty()).then(|| {
        let hit = gt
            .iter()
            .filter(|g| detections.iter().any(|d| g.overlap(d.start, d.end) > 0.0))
            .count();
        hit as f64 / gt.len() as f64
    });

    let boundary_errors = detections
        .iter()
        .enumerate()
        .filter_map(|(i, d)| {
            best_match(d, gt).map(|j| BoundaryError {
                detection: i,
                ground_truth: j,
                start_delta_s: d.start - gt[j].start,
                end_delta_s: d.end - gt[j].end,
            })
        })
        .collect();

    let mut fs_pct_by_outcome: BTreeMap<FeedbackLabel, Vec<f64>> = BTreeMap::new();
    for (&i, &label) in &labels {
        fs_pct_by_outcome
            .entry(label)
            .or_default()
            .push(detections[i].fs_pct_at_close);
    }

    SessionMetrics {
        detections: detections.to_vec(),
        labels,
        accuracy_pct,
        maybe_pct,
        recall,
        boundary_errors,
        fs_pct_by_outcome,
        duration_histogram: DurationHistogram::from_detections(detections),
        dangling_feedback,
    }
}
