//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary so every verdict is printed even when a check
//! fails. Exits nonzero if any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use socialpulse::fsd::{evaluate_balanced_accuracy, separable_fixture, train_linear, TrainParams};
use socialpulse::report::{ReportBundle, SessionInput};
use socialpulse::sim::generate::{random_mixed_scenario, random_saturated_scenario, ScenarioSpec};
use socialpulse::sim::{
    brute_force_oracle, generate_trace, metrics_from_parts, replay, InteractionKind, ScenarioInterval, Trace,
    TraceEvent, TraceMetadata,
};
use socialpulse::{
    analyze_recording, ClassScores, CloseReason, DetectorConfig, Embedding, FeedbackLabel, FrameAnalysis,
    Interaction, InteractionFsm, LinearFsModel, RecordingWindow,
};

type Verdict = Result<String, String>;
type Check<'a> = (&'static str, Box<dyn FnOnce() -> Verdict + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// A full recording under the default configuration: the first `cue_pairs`
/// pairs are Speech (class 0), the rest and the trailing frame class 137,
/// which is not a cue. `fs_frames` of the cue frames carry wearer speech for the
/// reference model.
fn window(cfg: &DetectorConfig, rec_ts: f64, cue_pairs: usize, fs_frames: usize) -> RecordingWindow {
    let n = cfg.frames_per_recording();
    assert!(fs_frames <= 2 * cue_pairs && 2 * cue_pairs <= n);
    let frames = (0..n)
        .map(|i| {
            let class = if i < 2 * cue_pairs { 0 } else { 137 };
            FrameAnalysis {
                scores: ClassScores::Sparse(vec![(class, 0.8)]),
                embedding: Embedding::Sparse(vec![(0, if i < fs_frames { 4.0 } else { -4.0 })]),
            }
        })
        .collect();
    RecordingWindow { rec_ts, frames }
}

fn trace(cfg: &DetectorConfig, events: Vec<TraceEvent>) -> Trace {
    let mut all = vec![TraceEvent::WearStatus { ts: 0.0, worn: true }];
    all.extend(events);
    Trace {
        metadata: TraceMetadata {
            participant_id: "A".into(),
            session_epoch_wallclock: None,
            seed: None,
            config: cfg.clone(),
        },
        events: all,
    }
}

/// Replays through the streaming detector and the oracle; both must agree.
fn detect(cfg: &DetectorConfig, model: &LinearFsModel, t: &Trace) -> Result<Vec<Interaction>, String> {
    let streamed = replay(t, model, cfg).map_err(|e| e.to_string())?.detections;
    let oracle = brute_force_oracle(t, model).map_err(|e| e.to_string())?;
    ensure(streamed == oracle, || format!("replay {streamed:?} != oracle {oracle:?}"))?;
    Ok(streamed)
}

fn rec(w: RecordingWindow) -> TraceEvent {
    TraceEvent::Recording(w)
}

fn oracle_equivalence() -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let started = Instant::now();
    let (mut detections, mut removals, mut recordings) = (0, 0, 0);
    let n = 1000;
    for seed in 0..n {
        let scenario = random_mixed_scenario(seed, &cfg);
        removals += scenario.removals.len();
        let t = generate_trace(&scenario, seed, &cfg, &model).map_err(|e| e.to_string())?;
        recordings += t.recordings().count();
        let streamed = replay(&t, &model, &cfg).map_err(|e| format!("seed {seed}: {e}"))?.detections;
        let oracle = brute_force_oracle(&t, &model).map_err(|e| format!("seed {seed}: {e}"))?;
        if let Some(i) = (0..streamed.len().max(oracle.len())).find(|&i| streamed.get(i) != oracle.get(i)) {
            return Err(format!(
                "seed {seed}, detection {i}: replay {:?}, oracle {:?}",
                streamed.get(i),
                oracle.get(i)
            ));
        }
        detections += streamed.len();
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:.2?}"))?;
    ensure(detections > 0 && removals > 0, || "degenerate sample".into())?;
    Ok(format!(
        "{n} traces, {recordings} recordings, {removals} removals, {detections} identical detections in {elapsed:.2?}"
    ))
}

fn boundary_exactness() -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let dropout = trace(&cfg, vec![rec(window(&cfg, 1000.0, 16, 16)), rec(window(&cfg, 1106.0, 0, 0))]);
    let d = detect(&cfg, &model, &dropout)?;
    ensure(
        d.len() == 1 && d[0].start == 1000.0 && d[0].end == 1032.0 && d[0].close_reason == CloseReason::CueDropout,
        || format!("dropout: {d:?}"),
    )?;
    let removal = trace(
        &cfg,
        vec![
            rec(window(&cfg, 1000.0, 16, 16)),
            rec(window(&cfg, 1106.0, 16, 16)),
            TraceEvent::WearStatus { ts: 1250.0, worn: false },
        ],
    );
    let r = detect(&cfg, &model, &removal)?;
    ensure(
        r.len() == 1 && r[0].start == 1000.0 && r[0].end == 1196.0 && r[0].close_reason == CloseReason::OffBody,
        || format!("removal: {r:?}"),
    )?;
    Ok(format!(
        "dropout at 1106 -> ({}, {}); removal at 1250 -> ({}, {})",
        d[0].start, d[0].end, r[0].start, r[0].end
    ))
}

fn threshold_semantics() -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);

    // 8 of 16 pairs are cues.
    let half = window(&cfg, 1000.0, 8, 16);
    let a = analyze_recording(&half, &cfg);
    ensure(a.cue_pct == 50.0, || format!("cue_pct {}", a.cue_pct))?;
    let mut fsm = InteractionFsm::new(cfg.clone());
    fsm.on_recording(1000.0, &a, &model).map_err(|e| e.to_string())?;
    ensure(fsm.state().interact_on, || "cue_pct 50 did not start an interaction".into())?;

    // 10 foreground frames over two recordings: 100 * 4.8 / 32 = 15.
    let at = trace(&cfg, vec![rec(window(&cfg, 1000.0, 16, 10)), rec(window(&cfg, 1106.0, 0, 0))]);
    let d = detect(&cfg, &model, &at)?;
    ensure(d.len() == 1 && d[0].fs_pct_at_close == 15.0, || format!("q_fs 15: {d:?}"))?;

    // Same recordings with frames one ulp shorter: q_fs falls just below 15.
    let short = DetectorConfig {
        frame_len_s: f64::from_bits(0.48f64.to_bits() - 1),
        ..cfg.clone()
    };
    let q = 100.0 * (10.0 * short.frame_len_s) / (2.0 * short.record_len_s);
    ensure(q < 15.0 && q > 15.0 - 1e-12, || format!("fixture q_fs {q}"))?;
    let below = trace(&short, vec![rec(window(&short, 1000.0, 16, 10)), rec(window(&short, 1106.0, 0, 0))]);
    let d = detect(&short, &model, &below)?;
    ensure(d.is_empty(), || format!("q_fs {q}: {d:?}"))?;
    let mut fsm = InteractionFsm::new(short.clone());
    for w in below.recordings() {
        fsm.on_recording(w.rec_ts, &analyze_recording(w, &short), &model)
            .map_err(|e| e.to_string())?;
    }
    ensure(fsm.state().is_reset(), || "discard did not reset".into())?;

    Ok(format!("cue_pct 50.0 -> cue-positive; q_fs 15.0 -> emitted; q_fs {q:.17} -> discarded"))
}

fn minimum_duration() -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let t = trace(&cfg, vec![rec(window(&cfg, 500.0, 16, 16)), rec(window(&cfg, 606.0, 0, 0))]);
    let d = detect(&cfg, &model, &t)?;
    ensure(d.len() == 1 && d[0].duration_s() == 32.0, || format!("{d:?}"))?;

    // No cue-dropout emission on random traces is shorter.
    let mut shortest = f64::INFINITY;
    for seed in 0..200 {
        let t = generate_trace(&random_mixed_scenario(seed, &cfg), seed, &cfg, &model).map_err(|e| e.to_string())?;
        for d in replay(&t, &model, &cfg).map_err(|e| e.to_string())?.detections {
            if d.close_reason == CloseReason::CueDropout {
                shortest = shortest.min(d.duration_s());
            }
        }
    }
    ensure(shortest >= 32.0, || format!("random traces produced {shortest} s"))?;
    Ok(format!("single cue recording then dropout -> 32 s; shortest over 200 random traces {shortest} s"))
}

fn saturated_traces() -> Result<Vec<(ScenarioSpec, Trace)>, String> {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    (0..100)
        .map(|seed| {
            let s = random_saturated_scenario(seed, &cfg);
            let t = generate_trace(&s, seed, &cfg, &model).map_err(|e| e.to_string())?;
            Ok((s, t))
        })
        .collect()
}

fn recall(traces: &[(ScenarioSpec, Trace)]) -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let (mut intervals, mut virt) = (0, 0);
    for (i, (s, t)) in traces.iter().enumerate() {
        let out = replay(t, &model, &cfg).map_err(|e| e.to_string())?;
        ensure(out.metrics.recall == Some(1.0), || format!("trace {i}: recall {:?}", out.metrics.recall))?;
        intervals += s.intervals.len();
        virt += s.intervals.iter().filter(|iv| iv.kind == InteractionKind::Virtual).count();
    }
    Ok(format!("recall 1.0 on {} traces ({intervals} intervals, {virt} virtual)", traces.len()))
}

fn boundary_errors(traces: &[(ScenarioSpec, Trace)]) -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let bound = cfg.interval_s + cfg.record_len_s;
    let (mut worst_start, mut worst_end, mut n) = (0.0f64, 0.0f64, 0);
    for (i, (_, t)) in traces.iter().enumerate() {
        let out = replay(t, &model, &cfg).map_err(|e| e.to_string())?;
        ensure(
            out.metrics.boundary_errors.len() == out.detections.len(),
            || format!("trace {i}: unmatched detection"),
        )?;
        for b in &out.metrics.boundary_errors {
            worst_start = worst_start.max(b.start_delta_s.abs());
            worst_end = worst_end.max(b.end_delta_s.abs());
            n += 1;
            ensure(
                b.start_delta_s.abs() <= bound && b.end_delta_s.abs() <= bound,
                || format!("trace {i}: {b:?}"),
            )?;
        }
    }
    Ok(format!(
        "{n} matched detections; max |start delta| {worst_start} s, max |end delta| {worst_end} s, bound {bound} s"
    ))
}

fn metric_fidelity() -> Verdict {
    let d = Interaction {
        start: 0.0,
        end: 100.0,
        fs_pct_at_close: 50.0,
        close_reason: CloseReason::CueDropout,
    };
    let feedback: Vec<(usize, FeedbackLabel)> = (0..343)
        .map(|i| {
            let label = match i {
                0..=250 => FeedbackLabel::Yes,
                251..=318 => FeedbackLabel::No,
                _ => FeedbackLabel::Maybe,
            };
            (i, label)
        })
        .collect();
    let m = metrics_from_parts(&vec![d; 343], &[], &feedback);
    let acc = m.accuracy_pct.ok_or("no accuracy")?;
    ensure((acc - 73.18).abs() <= 0.01, || format!("accuracy {acc}"))?;

    // Eleven sessions, (yes, labeled); mean and sample SD worked out by hand.
    let per_session = [(5, 6), (3, 4), (7, 10), (2, 5), (9, 9), (4, 7), (6, 8), (1, 4), (8, 11), (3, 3), (5, 9)];
    let inputs: Vec<SessionInput> = per_session
        .iter()
        .enumerate()
        .map(|(k, &(yes, n))| SessionInput {
            session_id: format!("S{k:02}"),
            detections: vec![d; n],
            feedback: (0..n)
                .map(|i| (i, if i < yes { FeedbackLabel::Yes } else { FeedbackLabel::No }))
                .collect(),
            ground_truth: None,
        })
        .collect();
    let r = ReportBundle::build(&inputs);
    let mean = r.per_participant_mean_pct.ok_or("no mean")?;
    let sd = r.per_participant_sd_pct.ok_or("no sd")?;
    ensure((mean - 68.5235).abs() <= 0.01 && (sd - 23.0438).abs() <= 0.01, || {
        format!("mean {mean}, sd {sd}")
    })?;
    Ok(format!(
        "251/343 -> {acc:.4}%; 11 sessions -> mean {mean:.4}%, SD {sd:.4}% (hand: 68.5235, 23.0438)"
    ))
}

fn fsd_reference_head() -> Verdict {
    let data = separable_fixture(100, 16, 1);
    let params = TrainParams {
        learning_rate: 0.01,
        epochs: 500,
        l2: 0.0,
        seed: 5,
    };
    let a = train_linear(&data, &params).map_err(|e| e.to_string())?;
    let acc = evaluate_balanced_accuracy(&a.model, &data).map_err(|e| e.to_string())?;
    ensure(acc >= 99.0, || format!("balanced accuracy {acc}"))?;
    if let Some(i) = a.loss_history.windows(2).position(|w| w[1] > w[0]) {
        return Err(format!("loss rose at epoch {}", i + 1));
    }
    let b = train_linear(&data, &params).map_err(|e| e.to_string())?;
    ensure(a.model.to_json_string() == b.model.to_json_string(), || "retraining differs".into())?;
    Ok(format!(
        "balanced accuracy {acc:.2}%, loss {:.4} -> {:.4} non-increasing over 500 epochs, retrain bit-identical",
        a.loss_history[0],
        a.loss_history[500]
    ))
}

fn throughput() -> Verdict {
    let cfg = DetectorConfig::default();
    let model = LinearFsModel::reference(cfg.embedding_dim);
    let day = 86_400.0;
    let traces: Vec<Trace> = (0..38u64)
        .map(|p| {
            // A day with a dozen conversations of varied density.
            let mut s = random_mixed_scenario(p, &cfg);
            s.session_len_s = day;
            s.removals.clear();
            s.intervals = (0..12)
                .map(|k| ScenarioInterval {
                    start: 3_600.0 + 6_000.0 * k as f64,
                    end: 3_600.0 + 6_000.0 * k as f64 + 1_200.0 + 100.0 * k as f64,
                    cue_density: [1.0, 0.75, 0.5][k % 3],
                    fs_density: [0.5, 0.15, 1.0, 0.1][k % 4],
                    kind: InteractionKind::InPerson,
                })
                .collect();
            generate_trace(&s, p, &cfg, &model).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let cycles: usize = traces.iter().map(|t| t.recordings().count()).sum();
    let started = Instant::now();
    let mut detections = 0;
    for t in &traces {
        detections += replay(t, &model, &cfg).map_err(|e| e.to_string())?.detections.len();
    }
    let elapsed = started.elapsed();
    ensure(cycles >= 30_000, || format!("only {cycles} duty cycles"))?;
    ensure(elapsed < Duration::from_secs(10), || format!("{cycles} cycles took {elapsed:.2?}"))?;
    Ok(format!(
        "38 participant-days, {cycles} duty cycles, {detections} detections replayed in {elapsed:.2?}"
    ))
}

fn main() -> ExitCode {
    let saturated = saturated_traces();
    let checks: Vec<Check> = vec![
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("boundary exactness", Box::new(boundary_exactness)),
        ("threshold boundary semantics", Box::new(threshold_semantics)),
        ("minimum emitted duration", Box::new(minimum_duration)),
        (
            "recall on saturated traces",
            Box::new(|| recall(saturated.as_ref().map_err(Clone::clone)?)),
        ),
        ("metric fidelity", Box::new(metric_fidelity)),
        ("foreground-speech reference head", Box::new(fsd_reference_head)),
        (
            "boundary-error bound",
            Box::new(|| boundary_errors(saturated.as_ref().map_err(Clone::clone)?)),
        ),
        ("replay throughput", Box::new(throughput)),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
