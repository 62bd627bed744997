// The full evaluation protocol for R-HGE next to the homogeneous and
// feature-only baselines, on a shortened schedule.

use hetlink::train::TrainConfig;
use hetlink::io::{run_evaluation, RunConfig};
use hetlink::model::ModelPreset;

pub fn run_example() -> hetlink::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.models = vec![ModelPreset::Sgd, ModelPreset::Gcn, ModelPreset::Sage, ModelPreset::RHge];
    cfg.train = TrainConfig { epochs: 15, ..TrainConfig::large_step() };
    cfg.layer_sizes = Some(vec![32, 32]);
    cfg.eval.n_folds = 2;
    let report = run_evaluation(&cfg, None)?;
    print!("{}", report.markdown()?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
