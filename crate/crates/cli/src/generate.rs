use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use socialpulse::sim::generate::{random_mixed_scenario, random_saturated_scenario};
use socialpulse::sim::{generate_trace, ScenarioSpec};
use socialpulse::LinearFsModel;

use crate::exit::CliError;

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RandomKind {
    /// Mixed cue and foreground densities with random removals.
    Mixed,
    /// Fully conversational, all-foreground intervals, well separated.
    Saturated,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Scenario TOML file.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    scenario: Option<PathBuf>,
    /// Draw the scenario itself from the seed instead of reading a file.
    #[arg(long, value_enum)]
    random: Option<RandomKind>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Detector configuration TOML; defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model the embeddings are steered against; the reference model when absent.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: GenerateArgs) -> Result<(), CliError> {
    let cfg = crate::load_config(a.config.as_ref())?;
    let scenario = match (&a.scenario, a.random) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read scenario {}", path.display()))?;
            ScenarioSpec::from_toml_str(&text)
                .with_context(|| format!("scenario {}", path.display()))?
        }
        (None, Some(RandomKind::Mixed)) => random_mixed_scenario(a.seed, &cfg),
        (None, Some(RandomKind::Saturated)) => random_saturated_scenario(a.seed, &cfg),
        (None, None) => return Err(CliError::usage("one of --scenario or --random is required")),
    };
    let model = match &a.model {
        Some(p) => LinearFsModel::load(p)?,
        None => LinearFsModel::reference(cfg.embedding_dim),
    };
    let trace = generate_trace(&scenario, a.seed, &cfg, &model)?;
    trace.save(&a.out)?;
    log::info!(
        "wrote {} events ({} recordings) to {}",
        trace.events.len(),
        trace.recordings().count(),
        a.out.display()
    );
    Ok(())
}
