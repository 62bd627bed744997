// Train on one synthetic corpus, score on another: the within/between
// dataset grid with deviations from each within-dataset score.

use hetlink::train::TrainConfig;
use hetlink::io::{run_transfer, RunConfig};

pub fn run_example() -> hetlink::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.train = TrainConfig { epochs: 10, ..TrainConfig::large_step() };
    cfg.layer_sizes = Some(vec![32, 32]);
    cfg.eval.n_folds = 2;
    cfg.eval.subsample_count = 2;
    let outcome = run_transfer(&cfg, None)?;
    for (model, m) in &outcome.matrices {
        println!("## {model}\n\n{}", m.markdown());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
