// Turning node attributes (court city, case type, decision year, ...) into
// meta nodes that message passing can route through.

use hetlink::enrich::{default_attributes, enrich, plan_enrichment, strip_enrichment};
use hetlink::io::{generate_synthetic, Preset};

pub fn run_example() -> hetlink::Result<()> {
    let g = generate_synthetic(&Preset::OldLike.spec(3))?;
    let attrs = default_attributes(&g);
    println!("attributes found: {attrs:?}");

    let plan = plan_enrichment(&g, &attrs, 2)?;
    for e in &plan.entries {
        println!(
            "{}.{} -> {} values (+1 unknown) via `{}`",
            e.node_type,
            e.attribute,
            e.vocabulary.len(),
            e.relation
        );
    }
    let enriched = enrich(&g, &plan)?;
    println!(
        "nodes {} -> {}, edges {} -> {}",
        g.total_nodes(),
        enriched.total_nodes(),
        g.total_edges(),
        enriched.total_edges()
    );
    let back = strip_enrichment(&enriched);
    assert_eq!(back.total_edges(), g.total_edges());
    Ok(())
}

#[allow(dead_code)]
fn main() -> hetlink::Result<()> {
    run_example()
}
