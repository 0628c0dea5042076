//! Experiment runner: JSON configs in, CSV tables out.

use std::path::PathBuf;

use clap::Parser;

pub mod config;
pub mod error;
pub mod experiments;
pub mod format;
pub mod presets;

pub use config::{ExperimentConfig, Mode};
pub use error::CliError;
pub use experiments::Outcome;

#[derive(Debug, Parser)]
#[command(
    name = "anc",
    about = "Secure analog network coding rates in layered relay networks"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    /// JSON experiment config; keys given here override the preset's.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV destination; stdout when neither this nor the config names one.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// One of example1, fig4, fig5a, fig5b.
    #[arg(long)]
    pub preset: Option<String>,
    /// Registered scaling strategy (auto, diamond, layered, all-max,
    /// high-snr, oracle).
    #[arg(long)]
    pub strategy: Option<String>,
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Preset, then config file on top, then command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut value = match &cli.preset {
        Some(name) => {
            let cfg = presets::preset(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset `{}` (available: {})",
                    name,
                    presets::PRESETS.join(", ")
                ))
            })?;
            serde_json::to_value(cfg).expect("preset serializes")
        }
        None => serde_json::Value::Object(Default::default()),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
        let over: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
        merge(&mut value, over);
    } else if cli.preset.is_none() {
        return Err(CliError::Config(
            "either --config or --preset is required".into(),
        ));
    }
    let mut cfg = ExperimentConfig::from_value(value)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.output.is_some() {
        cfg.output = cli.output.clone();
    }
    if cli.strategy.is_some() {
        cfg.strategy = cli.strategy.clone();
    }
    Ok(cfg)
}

/// Runs the mode and writes the CSV to the configured output, if any.
pub fn execute(cli: &Cli) -> Result<(ExperimentConfig, Outcome), CliError> {
    let cfg = resolve_config(cli)?;
    let outcome = experiments::run(&cfg, cli.mode)?;
    if let Some(path) = &cfg.output {
        let file = std::fs::File::create(path)?;
        outcome.table.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok((cfg, outcome))
}

/// Caps the rayon pool at `ANC_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ANC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "ANC_THREADS must be a positive integer, got {:?}",
            v
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("ANC_THREADS: {}", e)))
}
