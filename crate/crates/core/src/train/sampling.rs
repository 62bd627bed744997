use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, HeteroGraph, RelationId};

/// Mixes a tag into a seed (SplitMix64 finalizer), giving independent
/// streams for epochs, folds and subsamples.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// For each positive `(u, v)`, `k` corrupted pairs `(u, v')` with `v'`
/// uniform over `0..n_dst` and `(u, v')` not in `exclude`.
pub fn corrupt_destinations<R: Rng + ?Sized>(
    positives: &[(u32, u32)],
    exclude: &Adjacency,
    n_dst: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<(u32, u32)>> {
    let mut out = Vec::with_capacity(positives.len() * k);
    for &(u, _) in positives {
        let known = if (u as usize) < exclude.num_sources() {
            exclude.out_degree(u as usize)
        } else {
            0
        };
        if known >= n_dst {
            return Err(Error::Sampling(format!(
                "source {u} is linked to all {n_dst} destinations, no negative exists"
            )));
        }
        for _ in 0..k {
            loop {
                let v = rng.random_range(0..n_dst) as u32;
                if (u as usize) >= exclude.num_sources() || !exclude.contains(u as usize, v) {
                    out.push((u, v));
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// `k` negatives per edge of target relation `r`, by destination corruption.
pub fn sample_negatives<R: Rng + ?Sized>(
    g: &HeteroGraph,
    r: RelationId,
    k: usize,
    rng: &mut R,
) -> Result<Vec<(u32, u32)>> {
    let rel = g.relation(r);
    if !rel.is_target {
        return Err(Error::InvalidArgument(format!(
            "`{}` is not a target relation",
            rel.name
        )));
    }
    let adj = g.adjacency(r);
    let positives: Vec<(u32, u32)> = adj.iter().collect();
    corrupt_destinations(&positives, adj, g.node_count(rel.dst), k, rng)
}

/// Relations subject to edge dropout: non-meta target relations.
pub fn droppable_relations(g: &HeteroGraph) -> Vec<RelationId> {
    g.schema()
        .relation_ids()
        .filter(|&r| {
            let rel = g.relation(r);
            rel.is_target && !rel.is_meta
        })
        .collect()
}

/// Keep masks of one edge-dropout draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DropMask {
    pub relation: RelationId,
    /// One flag per edge, in canonical edge order.
    pub keep: Vec<bool>,
    /// Reverse twin and its flags, also in its own canonical edge order.
    pub reverse: Option<(RelationId, Vec<bool>)>,
}

/// Draws keep flags for every droppable relation. A reverse edge `(v, u)` is
/// kept exactly when its forward edge `(u, v)` is; reverse edges without a
/// forward counterpart are left alone.
pub fn edge_dropout_masks<R: Rng + ?Sized>(
    g: &HeteroGraph,
    p: f64,
    rng: &mut R,
) -> Result<Vec<DropMask>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge dropout probability {p} outside [0, 1]"
        )));
    }
    let mut masks = Vec::new();
    for r in droppable_relations(g) {
        let fwd = g.adjacency(r);
        let keep: Vec<bool> = (0..fwd.num_edges())
            .map(|_| p < 1.0 && (p == 0.0 || rng.random::<f64>() >= p))
            .collect();
        let reverse = g.schema().reverse_of(r).map(|rr| {
            let kept = fwd.filter_mask(&keep);
            let flags = g
                .adjacency(rr)
                .iter()
                .map(|(v, u)| kept.contains(u as usize, v) || !fwd.contains(u as usize, v))
                .collect();
            (rr, flags)
        });
        masks.push(DropMask {
            relation: r,
            keep,
            reverse,
        });
    }
    Ok(masks)
}

pub fn apply_drop_masks(g: &HeteroGraph, masks: &[DropMask]) -> HeteroGraph {
    let mut sets = Vec::new();
    for m in masks {
        sets.push((m.relation, g.adjacency(m.relation).filter_mask(&m.keep)));
        if let Some((rr, flags)) = &m.reverse {
            sets.push((*rr, g.adjacency(*rr).filter_mask(flags)));
        }
    }
    g.with_edge_sets(sets)
}

/// Message-passing view with each target edge (and its reverse twin) kept
/// with probability `1 - p`. Meta and context relations are shared with `g`.
pub fn edge_dropout<R: Rng + ?Sized>(g: &HeteroGraph, p: f64, rng: &mut R) -> Result<HeteroGraph> {
    let masks = edge_dropout_masks(g, p, rng)?;
    Ok(apply_drop_masks(g, &masks))
}
