use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use socialpulse::sim::logs::{detection_entries, feedback_entries, write_jsonl};
use socialpulse::sim::{brute_force_oracle, replay, SessionMetrics, Trace};
use socialpulse::{DetectorConfig, Interaction, LinearFsModel};

use crate::exit::CliError;

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Trace files; several are replayed in parallel.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Model file; the reference model when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Detector configuration TOML. Must match every trace; each trace's own
    /// configuration is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also run the batch oracle and fail on any disagreement.
    #[arg(long)]
    oracle_check: bool,
    /// Detection log (JSONL) for all traces, in argument order.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feedback log (JSONL) of the feedback events found in the traces.
    #[arg(long)]
    feedback_out: Option<PathBuf>,
    /// Session id for the logs; the trace's participant id when absent.
    /// Only valid with a single trace.
    #[arg(long)]
    session_id: Option<String>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    trace: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    session_id: Option<String>,
    /// Detection log (JSONL) destination.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct SessionSummary<'a> {
    session_id: &'a str,
    trace: String,
    metrics: &'a SessionMetrics,
}

struct Replayed {
    path: PathBuf,
    session_id: String,
    trace: Trace,
    detections: Vec<Interaction>,
    metrics: SessionMetrics,
}

fn load_model(path: Option<&PathBuf>, dim: usize) -> Result<LinearFsModel, CliError> {
    Ok(match path {
        Some(p) => LinearFsModel::load(p)?,
        None => LinearFsModel::reference(dim),
    })
}

fn load_trace(path: &Path) -> Result<Trace, CliError> {
    Ok(Trace::load(path).with_context(|| format!("trace {}", path.display()))?)
}

/// First index where two detection lists differ, with both sides.
fn first_divergence(streamed: &[Interaction], oracle: &[Interaction]) -> Option<String> {
    let n = streamed.len().max(oracle.len());
    (0..n).find_map(|i| {
        let (s, o) = (streamed.get(i), oracle.get(i));
        (s != o).then(|| format!("detection {i}: replay {s:?}, oracle {o:?}"))
    })
}

pub fn run(a: ReplayArgs) -> Result<(), CliError> {
    if a.session_id.is_some() && a.traces.len() > 1 {
        return Err(CliError::usage("--session-id needs exactly one trace"));
    }
    let fixed_cfg = match &a.config {
        Some(p) => Some(DetectorConfig::load(p)?),
        None => None,
    };
    let model = match &a.model {
        Some(p) => Some(LinearFsModel::load(p)?),
        None => None,
    };

    let results: Vec<Result<Replayed, CliError>> = a
        .traces
        .par_iter()
        .map(|path| {
            let trace = load_trace(path)?;
            let cfg = fixed_cfg.clone().unwrap_or_else(|| trace.config().clone());
            let model = match &model {
                Some(m) => m.clone(),
                None => LinearFsModel::reference(cfg.embedding_dim),
            };
            let out = replay(&trace, &model, &cfg).with_context(|| format!("replay {}", path.display()))?;
            if a.oracle_check {
                let oracle = brute_force_oracle(&trace, &model)
                    .with_context(|| format!("oracle {}", path.display()))?;
                if let Some(d) = first_divergence(&out.detections, &oracle) {
                    return Err(CliError::mismatch(format!("{}: {d}", path.display())));
                }
            }
            let session_id = a
                .session_id
                .clone()
                .unwrap_or_else(|| trace.metadata.participant_id.clone());
            Ok(Replayed {
                path: path.clone(),
                session_id,
                trace,
                detections: out.detections,
                metrics: out.metrics,
            })
        })
        .collect();

    // Report the first failure in argument order, mismatches first.
    let mut done = vec![];
    let mut first_err = None;
    for r in results {
        match r {
            Ok(x) => done.push(x),
            Err(e) => {
                let replace = match &first_err {
                    None => true,
                    Some(CliError { code, .. }) => e.code == crate::exit::MISMATCH && *code != crate::exit::MISMATCH,
                };
                if replace {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let mut detections = vec![];
    let mut feedback = vec![];
    for r in &done {
        detections.extend(detection_entries(&r.session_id, &r.detections));
        feedback.extend(feedback_entries(&r.session_id, &r.trace));
        let line = serde_json::to_string(&SessionSummary {
            session_id: &r.session_id,
            trace: r.path.display().to_string(),
            metrics: &r.metrics,
        })?;
        println!("{line}");
        for d in &r.metrics.dangling_feedback {
            log::warn!("{}: feedback for missing detection {d} ignored", r.path.display());
        }
    }
    if let Some(out) = &a.out {
        write_jsonl(out, &detections)?;
    }
    if let Some(out) = &a.feedback_out {
        write_jsonl(out, &feedback)?;
    }
    if a.oracle_check {
        eprintln!("oracle check passed on {} trace(s)", done.len());
    }
    Ok(())
}

pub fn run_oracle(a: OracleArgs) -> Result<(), CliError> {
    let trace = load_trace(&a.trace)?;
    let model = load_model(a.model.as_ref(), trace.config().embedding_dim)?;
    let detections = brute_force_oracle(&trace, &model)?;
    let session_id = a.session_id.unwrap_or_else(|| trace.metadata.participant_id.clone());
    write_jsonl(&a.out, &detection_entries(&session_id, &detections))?;
    println!("{} detection(s)", detections.len());
    Ok(())
}
