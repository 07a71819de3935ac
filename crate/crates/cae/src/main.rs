use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cae::commands::{self, SimSource, Style};
use cae::config::{Overrides, RunConfig};
use clap::{Args, Parser, Subcommand};

/// Convolutional denoising autoencoder: training, evaluation and accelerator simulation.
#[derive(Parser)]
#[command(name = "cae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on noisy/clean pairs and write weights plus a report.
    Train(Common),
    /// Write noisy and denoised PGM files for every configured image.
    Denoise {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Score trained weights against the noisy baseline.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        weights: PathBuf,
    },
    /// Run one image through the cycle-level accelerator model.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trained weights; without them the seeded initialization is used.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Image index in the configured file.
        #[arg(long, default_value_t = 0, conflicts_with = "synthetic")]
        index: usize,
        /// Use uniform random pixels instead of a dataset image.
        #[arg(long)]
        synthetic: bool,
    },
    /// Run the built-in oracle suites.
    Selftest {
        /// Report a failure regardless of the outcome.
        #[arg(long)]
        force_fail: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// IDX image file.
    #[arg(long)]
    images: Option<PathBuf>,
    /// IDX label file, enables per-digit results.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Use only the first N images.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Channel profile, seven comma-separated counts.
    #[arg(long, value_delimiter = ',')]
    profile: Option<Vec<usize>>,
}

impl Common {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let o = Overrides {
            seed: self.seed,
            images: self.images.clone(),
            labels: self.labels.clone(),
            limit: self.limit,
            epochs: self.epochs,
            learning_rate: self.lr,
            profile: self.profile.clone(),
        };
        Ok(RunConfig::resolve(self.config.as_deref(), &o)?)
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let stdout = std::io::stdout();
    let mut console = stdout.lock();
    match cli.command {
        Command::Train(c) => {
            let cfg = c.resolve()?;
            commands::train_cmd(&cfg, &c.out, &mut console).context("train failed")?;
        }
        Command::Denoise { common, weights } => {
            let cfg = common.resolve()?;
            commands::denoise_cmd(&cfg, &weights, &common.out, &mut console).context("denoise failed")?;
        }
        Command::Eval { common, weights } => {
            let cfg = common.resolve()?;
            commands::eval_cmd(&cfg, &weights, &common.out, &mut console).context("eval failed")?;
        }
        Command::Simulate {
            common,
            weights,
            index,
            synthetic,
        } => {
            let cfg = common.resolve()?;
            let source = if synthetic {
                SimSource::Synthetic
            } else {
                SimSource::Dataset { index }
            };
            commands::simulate_cmd(&cfg, weights.as_deref(), &source, &common.out, &mut console)
                .context("simulate failed")?;
        }
        Command::Selftest { force_fail } => {
            return Ok(cae::selftest::run(force_fail, Style::detect(), &mut console)?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
