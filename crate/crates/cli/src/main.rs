//! `ppr`: data generation, training, evaluation and LUT application.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ppr", version, about = "Portrait retouching with adaptive 3D LUTs")]
pub struct Cli {
    /// Worker threads; the PPR_THREADS environment variable takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpertArg {
    A,
    B,
    C,
}

impl From<ExpertArg> for ppr_core::Expert {
    fn from(e: ExpertArg) -> Self {
        match e {
            ExpertArg::A => ppr_core::Expert::A,
            ExpertArg::B => ppr_core::Expert::B,
            ExpertArg::C => ppr_core::Expert::C,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResolutionArg {
    Lr,
    Hr,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic benchmark (images, masks, targets, manifest).
    GenData(GenDataArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint or a `.cube` LUT against expert targets.
    Eval(EvalArgs),
    /// Apply a LUT or checkpoint to one image, streaming row tiles.
    Apply(ApplyArgs),
    /// Write before/after pairs of random tonal jitter.
    AugmentPreview(AugmentPreviewArgs),
    /// Tabulate one or more metric reports side by side.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Generator settings (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Training config (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub expert: Option<ExpertArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("retoucher").required(true).args(["checkpoint", "lut"])))]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub lut: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "a")]
    pub expert: ExpertArg,
    #[arg(long, value_enum, default_value = "lr")]
    pub resolution: ResolutionArg,
    /// Channels for M_GLC, e.g. `ab`, `Lab` or `RGB`.
    #[arg(long)]
    pub channels: Option<String>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
    /// Supplies split policy, channels and metric weights.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Split seed for manifests without explicit splits.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub human_weight: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("retoucher").required(true).args(["checkpoint", "lut"])))]
pub struct ApplyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub lut: Option<PathBuf>,
    #[arg(long, default_value_t = ppr_core::lut::DEFAULT_TILE_ROWS)]
    pub tile_rows: usize,
    /// Where the result and summary files go; defaults to the output's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentPreviewArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Training config whose `augment` block is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub count: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON files written by `eval`.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var("PPR_THREADS") {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("PPR_THREADS must be a positive integer, got '{v}'"))?;
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = thread_count(cli.threads)? {
        anyhow::ensure!(n > 0, "thread count must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::GenData(a) => commands::gen_data(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Apply(a) => commands::apply(a),
        Command::AugmentPreview(a) => commands::augment_preview(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
