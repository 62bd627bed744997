// The component ladder from HGE to R-HGE, written to an output directory
// like the `ablate` subcommand.

use hetlink::train::TrainConfig;
use hetlink::io::{execute, Command, RunConfig};

pub fn run_example() -> hetlink::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.train = TrainConfig { epochs: 10, ..TrainConfig::large_step() };
    cfg.layer_sizes = Some(vec![32, 32]);
    cfg.eval.n_folds = 2;
    cfg.eval.subsample_count = 2;
    let out = std::env::temp_dir().join(format!("hetlink-ablation-{}", std::process::id()));
    execute(Command::Ablate, &cfg, &out)?;
    let summary = std::fs::read_to_string(out.join("summary.md")).map_err(|e| hetlink::Error::io(&out, e))?;
    print!("{summary}");
    std::fs::remove_dir_all(&out).map_err(|e| hetlink::Error::io(&out, e))?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
