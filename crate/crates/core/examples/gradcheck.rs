// Finite-difference check of the full training loss on a 10-node graph.

use hetlink::autodiff::GradCheckConfig;
use hetlink::io::toy_graph;
use hetlink::model::ModelConfig;
use hetlink::train::check_loss_gradient;

pub fn run_example() -> hetlink::Result<()> {
    let g = toy_graph();
    let cfg = ModelConfig::r_hge().with_width(8, 2);
    let report = check_loss_gradient(&g, &cfg, 0, &GradCheckConfig::default())?;
    println!("{report}");
    println!(
        "{} entries, max relative error {:.2e}: {}",
        report.total_checked(),
        report.max_rel_error(),
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
