// Train R-HGE on one temporal fold of a synthetic citation graph and score
// the fold's hidden citations.

use hetlink::eval::{evaluate_view, temporal_folds, EvalLabels, Induction};
use hetlink::io::{generate_synthetic, prepare_fold, train_fold, Preset, RunConfig};
use hetlink::model::RelationMapping;

pub fn run_example() -> hetlink::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.train.epochs = 60;
    let g = generate_synthetic(&Preset::LioLike.spec(cfg.seed))?;
    let plan = temporal_folds(&g, "case", 5)?;
    let fold = plan.n_folds() - 1;
    let prepared = prepare_fold(&g, &plan, fold, &cfg, Induction::Semi, true)?;
    println!(
        "fold {fold}: {} training nodes, {} hidden edges",
        prepared.train.total_nodes(),
        prepared.view.num_test_edges()
    );

    let spec = &cfg.model_specs()[0];
    let trained = train_fold(&prepared.train, spec, &cfg, fold)?;
    let h = &trained.history;
    println!("loss {:.4} -> {:.4}", h.first().unwrap_or(f64::NAN), h.last().unwrap_or(f64::NAN));

    let scorer = trained.model.scorer(&prepared.view.graph, &RelationMapping::identity())?;
    let labels = EvalLabels { model: &spec.label, dataset: "lio-like" };
    let report = evaluate_view(&scorer, &prepared.view, fold, &cfg.eval_config(), labels)?;
    print!("{}", report.markdown()?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
