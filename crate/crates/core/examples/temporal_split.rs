// Date-based folds: cumulative training graphs and semi- or fully
// inductive test views.

use hetlink::eval::{temporal_folds, test_subsamples, Induction};
use hetlink::io::{format_date, generate_synthetic, Preset};

pub fn run_example() -> hetlink::Result<()> {
    let g = generate_synthetic(&Preset::LioLike.spec(0))?;
    let plan = temporal_folds(&g, "case", 5)?;
    println!("fold | test period | train cases | semi edges | full edges");
    for fold in 0..plan.n_folds() {
        let (start, end) = plan.period(fold);
        let train = plan.train_graph(&g, fold)?;
        let semi = plan.test_view(&g, fold, Induction::Semi)?;
        let full = plan.test_view(&g, fold, Induction::Full)?;
        let cases = train.node_count(train.require_node_type("case")?);
        println!(
            "{fold} | {} .. {} | {cases} | {} | {}",
            format_date(start),
            format_date(end),
            semi.num_test_edges(),
            full.num_test_edges()
        );
    }

    let view = plan.test_view(&g, 0, Induction::Semi)?;
    let edges: Vec<_> = view.relations.iter().flat_map(|r| r.positives.clone()).collect();
    let subs = test_subsamples(&edges, 0.9, 5, 7)?;
    println!("5 subsamples of {} hidden edges, {} each", edges.len(), subs[0].len());
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
