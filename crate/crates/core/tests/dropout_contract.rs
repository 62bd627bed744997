mod common;

use common::{citation_graph, edge_set, rng};
use hetlink::graph::{HeteroGraph, RelationId};
use hetlink::train::{apply_drop_masks, droppable_relations, edge_dropout, edge_dropout_masks};

struct Contract {
    mean_kept: f64,
    twins_match: bool,
    others_untouched: bool,
}

fn check(g: &HeteroGraph, p: f64, trials: u64) -> Contract {
    let cites = g.schema().relation_id("cites").unwrap();
    let rev = g.schema().reverse_of(cites).unwrap();
    let others: Vec<RelationId> = g.schema().relation_ids().filter(|&r| r != cites && r != rev).collect();
    let total = g.num_edges(cites) as f64;
    let mut r = rng(11);
    let mut out = Contract { mean_kept: 0.0, twins_match: true, others_untouched: true };
    for _ in 0..trials {
        let d = edge_dropout(g, p, &mut r).unwrap();
        let fwd = edge_set(&d, cites);
        let back: std::collections::BTreeSet<_> = edge_set(&d, rev).into_iter().map(|(v, u)| (u, v)).collect();
        out.twins_match &= fwd == back;
        out.others_untouched &= others.iter().all(|&o| edge_set(&d, o) == edge_set(g, o));
        out.mean_kept += fwd.len() as f64 / total;
    }
    out.mean_kept /= trials as f64;
    out
}

#[test]
fn half_dropout_over_10k_masks() {
    let g = citation_graph(40, 100, 3);
    assert_eq!(g.num_edges(g.schema().relation_id("cites").unwrap()), 100);
    assert!(g.schema().relation_ids().any(|r| g.relation(r).is_meta));
    let c = check(&g, 0.5, 10_000);
    assert!((0.48..=0.52).contains(&c.mean_kept), "{}", c.mean_kept);
    assert!(c.twins_match);
    assert!(c.others_untouched);
}

#[test]
fn extreme_probabilities() {
    let g = citation_graph(40, 100, 4);
    let all: Vec<RelationId> = g.schema().relation_ids().collect();
    let mut r = rng(1);
    let same = edge_dropout(&g, 0.0, &mut r).unwrap();
    assert!(all.iter().all(|&x| edge_set(&same, x) == edge_set(&g, x)));
    let none = edge_dropout(&g, 1.0, &mut r).unwrap();
    let cites = g.schema().relation_id("cites").unwrap();
    assert_eq!(none.num_edges(cites), 0);
    assert_eq!(none.num_edges(g.schema().reverse_of(cites).unwrap()), 0);
    let c = check(&g, 1.0, 10);
    assert!(c.others_untouched && c.mean_kept == 0.0);
    assert!(edge_dropout(&g, 1.5, &mut r).is_err());
}

#[test]
fn masks_reapply_identically() {
    let g = citation_graph(30, 60, 5);
    assert_eq!(droppable_relations(&g).len(), 1);
    let masks = edge_dropout_masks(&g, 0.3, &mut rng(2)).unwrap();
    let a = apply_drop_masks(&g, &masks);
    let b = edge_dropout(&g, 0.3, &mut rng(2)).unwrap();
    for r in g.schema().relation_ids() {
        assert_eq!(edge_set(&a, r), edge_set(&b, r));
    }
}
