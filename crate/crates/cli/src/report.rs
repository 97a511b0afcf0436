use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use socialpulse::report::{ReportBundle, SessionInput};
use socialpulse::sim::logs::{read_jsonl, DetectionLogEntry, FeedbackLogEntry};
use socialpulse::sim::Trace;

use crate::exit::CliError;

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Detection logs (JSONL).
    #[arg(long = "detections", required = true, num_args = 1..)]
    detections: Vec<PathBuf>,
    /// Feedback logs (JSONL).
    #[arg(long = "feedback", num_args = 1..)]
    feedback: Vec<PathBuf>,
    /// Traces whose ground truth feeds recall and boundary deltas; matched
    /// to sessions by participant id.
    #[arg(long = "trace", num_args = 1..)]
    traces: Vec<PathBuf>,
    /// Directory for the CSV tables and a copy of the text report.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(a: ReportArgs) -> Result<(), CliError> {
    let mut sessions: BTreeMap<String, SessionInput> = BTreeMap::new();
    let entry = |sessions: &mut BTreeMap<String, SessionInput>, id: &str| {
        sessions
            .entry(id.to_string())
            .or_insert_with(|| SessionInput {
                session_id: id.to_string(),
                detections: vec![],
                feedback: vec![],
                ground_truth: None,
            })
            .session_id
            .clone()
    };

    let mut by_session: BTreeMap<String, Vec<DetectionLogEntry>> = BTreeMap::new();
    for path in &a.detections {
        let entries: Vec<DetectionLogEntry> =
            read_jsonl(path).with_context(|| format!("detection log {}", path.display()))?;
        for e in entries {
            by_session.entry(e.session_id.clone()).or_default().push(e);
        }
    }
    for (id, mut entries) in by_session {
        entries.sort_by_key(|e| e.index);
        for (expected, e) in entries.iter().enumerate() {
            if e.index != expected {
                return Err(anyhow!(
                    "session {id}: detection indices must run 0..n without gaps or repeats, found {} at position {expected}",
                    e.index
                )
                .into());
            }
        }
        entry(&mut sessions, &id);
        sessions.get_mut(&id).unwrap().detections = entries.iter().map(|e| e.interaction()).collect();
    }

    for path in &a.feedback {
        let entries: Vec<FeedbackLogEntry> =
            read_jsonl(path).with_context(|| format!("feedback log {}", path.display()))?;
        for e in entries {
            let id = entry(&mut sessions, &e.session_id);
            sessions.get_mut(&id).unwrap().feedback.push((e.interaction_index, e.label));
        }
    }

    for path in &a.traces {
        let trace = Trace::load(path).with_context(|| format!("trace {}", path.display()))?;
        let id = entry(&mut sessions, &trace.metadata.participant_id);
        sessions
            .get_mut(&id)
            .unwrap()
            .ground_truth
            .get_or_insert_with(Vec::new)
            .extend(trace.ground_truth());
    }

    let inputs: Vec<SessionInput> = sessions.into_values().collect();
    let report = ReportBundle::build(&inputs);
    for w in &report.warnings {
        log::warn!("{w}");
    }
    let text = report.render_text();
    print!("{text}");
    if let Some(dir) = &a.out {
        write_tables(&report, &text, dir)?;
    }
    Ok(())
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn write_tables(r: &ReportBundle, text: &str, dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let open = |name: &str| {
        let path = dir.join(name);
        csv::Writer::from_path(&path).with_context(|| format!("cannot write {}", path.display()))
    };
    let has_feedback = r.total_labeled > 0;

    let mut w = open("sessions.csv")?;
    if has_feedback {
        w.write_record(["session_id", "detections", "yes", "no", "maybe", "accuracy_pct", "recall"])?;
    } else {
        w.write_record(["session_id", "detections", "recall"])?;
    }
    for s in &r.sessions {
        let mut row = vec![s.session_id.clone(), s.detections.to_string()];
        if has_feedback {
            row.extend([
                s.yes.to_string(),
                s.no.to_string(),
                s.maybe.to_string(),
                fmt_opt(s.accuracy_pct),
            ]);
        }
        row.push(fmt_opt(s.recall));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = open("summary.csv")?;
    w.write_record(["metric", "value"])?;
    w.write_record(["detections", &r.total_detections.to_string()])?;
    w.write_record(["labeled", &r.total_labeled.to_string()])?;
    if has_feedback {
        w.write_record(["aggregate_accuracy_pct", &fmt_opt(r.aggregate_accuracy_pct)])?;
        w.write_record(["per_participant_mean_pct", &fmt_opt(r.per_participant_mean_pct)])?;
        w.write_record(["per_participant_sd_pct", &fmt_opt(r.per_participant_sd_pct)])?;
    }
    w.flush()?;

    let h = &r.duration_histogram;
    let mut w = open("durations.csv")?;
    w.write_record(["bucket", "count"])?;
    w.write_record(["under_1_min", &h.under_1_min.to_string()])?;
    w.write_record(["1_to_2_min", &h.from_1_to_2_min.to_string()])?;
    w.write_record(["at_least_2_min", &h.at_least_2_min.to_string()])?;
    w.flush()?;

    let mut w = open("boundaries.csv")?;
    w.write_record(["session_id", "detection", "ground_truth", "start_delta_s", "end_delta_s"])?;
    for b in &r.boundary_deltas {
        w.write_record([
            b.session_id.clone(),
            b.error.detection.to_string(),
            b.error.ground_truth.to_string(),
            b.error.start_delta_s.to_string(),
            b.error.end_delta_s.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = open("fs_pct_by_outcome.csv")?;
    w.write_record(["label", "n", "min", "q1", "median", "q3", "max", "below_50"])?;
    for (label, q) in &r.fs_pct_by_outcome {
        w.write_record([
            label.as_str().to_string(),
            q.n.to_string(),
            q.min.to_string(),
            q.q1.to_string(),
            q.median.to_string(),
            q.q3.to_string(),
            q.max.to_string(),
            q.below_50.to_string(),
        ])?;
    }
    w.flush()?;

    let path = dir.join("report.txt");
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
