use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetlink::io::{execute, read_json, Command, DatasetSource, Preset, RunConfig};

#[derive(Parser)]
#[command(name = "hetlink", version, about = "Link prediction on heterogeneous graphs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Replaces the configured dataset with a synthetic preset.
    #[arg(long, global = true)]
    preset: Option<Preset>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Write a synthetic graph archive.
    Generate,
    /// Write the temporal fold plan.
    Split,
    /// Train every configured model on every fold.
    Train,
    /// Train and score the configured models.
    Evaluate,
    /// Score the component ablation series.
    Ablate,
    /// Cross-dataset transfer grid.
    Transfer,
    /// Compare analytic and numerical gradients on a toy graph.
    Gradcheck,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Generate => Command::Generate,
            Cmd::Split => Command::Split,
            Cmd::Train => Command::Train,
            Cmd::Evaluate => Command::Evaluate,
            Cmd::Ablate => Command::Ablate,
            Cmd::Transfer => Command::Transfer,
            Cmd::Gradcheck => Command::Gradcheck,
        }
    }
}

fn config(cli: &Cli) -> hetlink::Result<RunConfig> {
    let mut cfg: RunConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = cli.preset {
        cfg.dataset = DatasetSource::preset(p, cfg.seed);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = config(&cli).and_then(|cfg| execute(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
