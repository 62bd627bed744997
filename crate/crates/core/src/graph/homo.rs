//! Type-erased, bi-directed view used by the homogeneous baselines.

use ndarray::{s, Array2};

use super::{Adjacency, FeatureTable, HeteroGraph, NodeTypeId};

/// Disjoint union of all typed nodes with one symmetric edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoGraph {
    /// Global index of the first node of each type.
    pub type_offsets: Vec<usize>,
    pub num_nodes: usize,
    /// Symmetric: `(u, v)` present iff `(v, u)` present.
    pub adjacency: Adjacency,
    /// Zero-padded typed features followed by a node-type one-hot.
    pub features: Array2<f32>,
}

impl HomoGraph {
    pub fn global(&self, t: NodeTypeId, local: usize) -> usize {
        self.type_offsets[t.0] + local
    }

    pub fn type_range(&self, t: NodeTypeId) -> std::ops::Range<usize> {
        let end = self
            .type_offsets
            .get(t.0 + 1)
            .copied()
            .unwrap_or(self.num_nodes);
        self.type_offsets[t.0]..end
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.num_edges()
    }
}

/// Merges every relation into one node set, symmetrizes and deduplicates the
/// edges and unifies the features (pad to the widest type, append type
/// one-hot).
pub fn homogenize(g: &HeteroGraph) -> HomoGraph {
    let nt = g.num_node_types();
    let mut type_offsets = Vec::with_capacity(nt);
    let mut n = 0;
    for t in g.schema().node_type_ids() {
        type_offsets.push(n);
        n += g.node_count(t);
    }

    let mut pairs = Vec::with_capacity(2 * g.total_edges());
    for r in g.schema().relation_ids() {
        let rel = g.relation(r);
        let (os, od) = (type_offsets[rel.src.0] as u32, type_offsets[rel.dst.0] as u32);
        for (u, v) in g.adjacency(r).iter() {
            pairs.push((os + u, od + v));
            pairs.push((od + v, os + u));
        }
    }
    let (adjacency, _) = Adjacency::from_pairs(n, pairs);

    let max_dim = g
        .schema()
        .node_type_ids()
        .filter_map(|t| g.features(t).dim())
        .max()
        .unwrap_or(0);
    let mut features = Array2::<f32>::zeros((n, max_dim + nt));
    for t in g.schema().node_type_ids() {
        let start = type_offsets[t.0];
        let count = g.node_count(t);
        if let FeatureTable::Dense(m) = g.features(t) {
            features
                .slice_mut(s![start..start + count, ..m.ncols()])
                .assign(m);
        }
        features
            .slice_mut(s![start..start + count, max_dim + t.0])
            .fill(1.0);
    }

    HomoGraph {
        type_offsets,
        num_nodes: n,
        adjacency,
        features,
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::graph::{GraphBuilder, NodeRecord};

    #[test]
    fn symmetrized_edge_count() {
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        let law = b.add_node_type("law").unwrap();
        let cc = b.add_relation("cc", case, case, true).unwrap();
        let cl = b.add_relation("cl", case, law, true).unwrap();
        for i in 0..3 {
            b.add_node(case, NodeRecord::new(format!("c{i}")));
        }
        for i in 0..2 {
            b.add_node(law, NodeRecord::new(format!("l{i}")));
        }
        b.add_edge(cc, 1, 0);
        b.add_edge(cl, 0, 0);
        b.add_edge(cl, 2, 1);
        let h = homogenize(&b.build().unwrap());
        assert_eq!(h.num_nodes, 5);
        assert_eq!(h.num_edges(), 6);
    }

    #[test]
    fn unified_dimension_is_max_plus_types() {
        let mut b = GraphBuilder::new();
        let a = b.add_node_type("a").unwrap();
        let c = b.add_node_type("c").unwrap();
        let d = b.add_node_type("d").unwrap();
        b.add_node(a, NodeRecord::new("a0").with_features(vec![1.0, 2.0, 3.0, 4.0]));
        b.add_node(c, NodeRecord::new("c0").with_features(vec![5.0, 6.0]));
        b.add_node(d, NodeRecord::new("d0"));
        let h = homogenize(&b.build().unwrap());
        assert_eq!(h.features.ncols(), 7);
        assert_eq!(h.features.row(1).to_vec(), vec![5.0, 6.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(h.features.row(2).to_vec(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn adjacency_is_symmetric_against_dense_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut b = GraphBuilder::new();
        let x = b.add_node_type("x").unwrap();
        let y = b.add_node_type("y").unwrap();
        let xx = b.add_relation("xx", x, x, true).unwrap();
        let xy = b.add_relation("xy", x, y, false).unwrap();
        for i in 0..30 {
            b.add_node(x, NodeRecord::new(format!("x{i}")));
        }
        for i in 0..20 {
            b.add_node(y, NodeRecord::new(format!("y{i}")));
        }
        let mut seen = std::collections::HashSet::new();
        for _ in 0..120 {
            let (r, u, v) = if rng.random_bool(0.5) {
                (xx, rng.random_range(0..30), rng.random_range(0..30))
            } else {
                (xy, rng.random_range(0..30), rng.random_range(0..20))
            };
            if seen.insert((r, u, v)) {
                b.add_edge(r, u, v);
            }
        }
        let h = homogenize(&b.build().unwrap());
        let n = h.num_nodes;
        assert_eq!(n, 50);
        let mut dense = vec![vec![false; n]; n];
        for (u, v) in h.adjacency.iter() {
            dense[u as usize][v as usize] = true;
        }
        for u in 0..n {
            for v in 0..n {
                assert_eq!(dense[u][v], dense[v][u], "asymmetric at ({u},{v})");
            }
        }
    }
}
