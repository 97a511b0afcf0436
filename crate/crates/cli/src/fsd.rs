use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use socialpulse::fsd::{evaluate_balanced_accuracy, train_linear, Sample, TrainParams};
use socialpulse::{Embedding, LinearFsModel};

use crate::exit::CliError;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// CSV rows `label,x0,x1,...` with label 0 or 1; an optional header row
    /// is skipped.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decision threshold on the predicted probability.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReferenceArgs {
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn read_samples(path: &Path) -> anyhow::Result<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut samples = vec![];
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.with_context(|| format!("{}: line {line}", path.display()))?;
        let first = record.get(0).unwrap_or("");
        if i == 0 && first.parse::<f64>().is_err() {
            continue;
        }
        let label: u8 = match first {
            "0" => 0,
            "1" => 1,
            other => bail!("{}: line {line}: label must be 0 or 1, got {other:?}", path.display()),
        };
        let values = record
            .iter()
            .skip(1)
            .map(|x| x.parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}: line {line}: bad feature value", path.display()))?;
        samples.push(Sample {
            embedding: Embedding::Dense(values),
            label,
        });
    }
    Ok(samples)
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let data = read_samples(&a.data)?;
    let params = TrainParams {
        learning_rate: a.learning_rate,
        epochs: a.epochs,
        l2: a.l2,
        seed: a.seed,
    };
    let outcome = train_linear(&data, &params)?;
    let model = outcome.model.with_threshold(a.threshold)?;
    let accuracy = evaluate_balanced_accuracy(&model, &data)?;
    model.save(&a.out)?;
    let loss = outcome.loss_history.last().copied().unwrap_or(f64::NAN);
    println!("final_loss {loss:.6}");
    println!("train_balanced_accuracy_pct {accuracy:.2}");
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let model = LinearFsModel::load(&a.model)?;
    let data = read_samples(&a.data)?;
    let accuracy = evaluate_balanced_accuracy(&model, &data)?;
    println!("{accuracy:.1}");
    Ok(())
}

pub fn reference(a: ReferenceArgs) -> Result<(), CliError> {
    if a.dim == 0 {
        return Err(CliError::usage("--dim must be positive"));
    }
    LinearFsModel::reference(a.dim).save(&a.out)?;
    Ok(())
}
