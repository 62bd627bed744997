//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use hetlink::autodiff::Tape;
use hetlink::enrich::{enrich, plan_enrichment};
use hetlink::graph::{add_all_reverse_relations, GraphBuilder, HeteroGraph, NodeRecord, RelationId};
use hetlink::model::{
    encode, init_params, Activation, EncoderKind, GraphInputs, ModelConfig, ParamStore,
    RelationMapping,
};
use ndarray::{concatenate, s, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- metrics ----

/// Descending-score rank of every item, ties in input order, computed by
/// counting rather than sorting.
fn ranks(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .map(|i| {
            (0..scores.len())
                .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
                .count()
        })
        .collect()
}

/// Σ_k (recall_k − recall_{k−1}) · precision_k over every cut of the ranking.
pub fn brute_ap(scores: &[f64], labels: &[bool]) -> f64 {
    let r = ranks(scores);
    let mut ranked = vec![false; scores.len()];
    for (i, &k) in r.iter().enumerate() {
        ranked[k] = labels[i];
    }
    let total = labels.iter().filter(|&&l| l).count() as f64;
    let (mut tp, mut prev_recall, mut ap) = (0.0, 0.0, 0.0);
    for (k, &l) in ranked.iter().enumerate() {
        if l {
            tp += 1.0;
        }
        let recall = tp / total;
        let precision = tp / (k + 1) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// Every positive against every negative, ties worth one half.
pub fn brute_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut credit, mut pairs) = (0.0, 0.0);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    credit += 1.0;
                } else if scores[i] == scores[j] {
                    credit += 0.5;
                }
            }
        }
    }
    credit / pairs
}

/// A random scored instance with at least one label of each class. Scores
/// are drawn from a small grid half the time so ties are common.
pub fn metric_instance(seed: u64, min: usize, max: usize) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let n = r.random_range(min..=max);
    let coarse = r.random_bool(0.5);
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            if coarse {
                r.random_range(0..8) as f64 / 4.0
            } else {
                r.random_range(-3.0..3.0)
            }
        })
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
    labels[0] = true;
    labels[n - 1] = false;
    (scores, labels)
}

// ---- graphs ----

/// Cases citing cases (exactly `edges` distinct pairs), with a case-type meta
/// attribute and reverse twins for every relation.
pub fn citation_graph(cases: usize, edges: usize, seed: u64) -> HeteroGraph {
    let mut r = rng(seed);
    let mut b = GraphBuilder::new();
    let case = b.add_node_type("case").unwrap();
    let cites = b.add_relation("cites", case, case, true).unwrap();
    for i in 0..cases {
        b.add_node(
            case,
            NodeRecord::new(format!("c{i}"))
                .with_features(vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)])
                .with_meta("type", ["a", "b", "c"][i % 3]),
        );
    }
    let mut pairs = BTreeSet::new();
    while pairs.len() < edges {
        let (u, v) = (r.random_range(0..cases), r.random_range(0..cases));
        if u > v {
            pairs.insert((u, v));
        }
    }
    for (u, v) in pairs {
        b.add_edge(cites, u, v);
    }
    let g = b.build().unwrap();
    let plan = plan_enrichment(&g, &[("case".into(), "type".into())], 1).unwrap();
    add_all_reverse_relations(&enrich(&g, &plan).unwrap()).unwrap()
}

/// Two featured types, one featureless type and three relations with random
/// edges; at most 15 nodes.
pub fn small_random_graph(seed: u64) -> HeteroGraph {
    let mut r = rng(seed);
    let mut b = GraphBuilder::new();
    let a = b.add_node_type("a").unwrap();
    let c = b.add_node_type("c").unwrap();
    let m = b.add_node_type("m").unwrap();
    let counts = [r.random_range(1..7usize), r.random_range(1..6usize), r.random_range(1..3usize)];
    for i in 0..counts[0] {
        let f = (0..3).map(|_| r.random_range(-1.0..1.0f32)).collect();
        b.add_node(a, NodeRecord::new(format!("a{i}")).with_features(f));
    }
    for i in 0..counts[1] {
        let f = (0..2).map(|_| r.random_range(-1.0..1.0f32)).collect();
        b.add_node(c, NodeRecord::new(format!("c{i}")).with_features(f));
    }
    for i in 0..counts[2] {
        b.add_node(m, NodeRecord::new(format!("m{i}")));
    }
    let rels = [
        (b.add_relation("aa", a, a, true).unwrap(), 0, 0),
        (b.add_relation("ac", a, c, true).unwrap(), 0, 1),
        (b.add_relation("cm", c, m, false).unwrap(), 1, 2),
    ];
    for (rel, s, d) in rels {
        let mut pairs = BTreeSet::new();
        for _ in 0..r.random_range(0..12) {
            pairs.insert((r.random_range(0..counts[s]), r.random_range(0..counts[d])));
        }
        for (u, v) in pairs {
            b.add_edge(rel, u, v);
        }
    }
    b.build().unwrap()
}

pub fn edge_set(g: &HeteroGraph, r: RelationId) -> BTreeSet<(u32, u32)> {
    g.adjacency(r).iter().collect()
}

// ---- encoders ----

fn dense_adj(g: &HeteroGraph, r: RelationId) -> Array2<f64> {
    let rel = g.relation(r);
    let mut a = Array2::zeros((g.node_count(rel.src), g.node_count(rel.dst)));
    for (u, v) in g.adjacency(r).iter() {
        a[[u as usize, v as usize]] = 1.0;
    }
    a
}

/// Row v of the result averages the rows of the sources pointing at v.
fn dense_mean(a: &Array2<f64>) -> Array2<f64> {
    let mut m = a.t().to_owned();
    for mut row in m.rows_mut() {
        let d: f64 = row.sum();
        if d > 0.0 {
            row /= d;
        }
    }
    m
}

fn act(x: Array2<f64>, last: bool, cfg: &ModelConfig) -> Array2<f64> {
    match (last, cfg.activation) {
        (false, Activation::Relu) => x.mapv(|v| v.max(0.0)),
        _ => x,
    }
}

fn param<'a>(p: &'a ParamStore<f64>, name: &str) -> &'a Array2<f64> {
    p.get(name).unwrap_or_else(|| panic!("missing {name}"))
}

/// Library forward pass in evaluation mode.
pub fn encoder_forward(g: &HeteroGraph, cfg: &ModelConfig, p: &ParamStore<f64>) -> Vec<Array2<f64>> {
    let inputs = GraphInputs::new(g, cfg, p, &RelationMapping::identity()).unwrap();
    let mut tape = Tape::new();
    let vars = p.to_tape(&mut tape);
    let reps = encode(&mut tape, &inputs, &vars, cfg, false, &mut rng(0)).unwrap();
    reps.per_type.iter().map(|&v| tape.value(v).clone()).collect()
}

/// Relational forward pass with dense matrices and explicit loops.
pub fn hetero_oracle(g: &HeteroGraph, cfg: &ModelConfig, p: &ParamStore<f64>) -> Vec<Array2<f64>> {
    let schema = g.schema();
    let mut h: Vec<Array2<f64>> = schema
        .node_type_ids()
        .map(|t| {
            let name = &schema.node_type(t).name;
            match g.features(t).dense() {
                Some(x) => x.mapv(f64::from).dot(param(p, &format!("input/{name}"))),
                None => {
                    let e = param(p, &format!("embed/{name}"));
                    Array2::from_shape_fn((g.node_count(t), e.ncols()), |(_, j)| e[[0, j]])
                }
            }
        })
        .collect();
    let mut blocks: Vec<Vec<Array2<f64>>> = h.iter().map(|x| vec![x.clone()]).collect();
    let n_layers = cfg.layer_sizes.len();
    for i in 0..n_layers {
        let mut next = Vec::new();
        for t in schema.node_type_ids() {
            let name = &schema.node_type(t).name;
            let w_self = match cfg.encoder {
                EncoderKind::Rgcn => param(p, &format!("layer{i}/self")),
                _ => param(p, &format!("layer{i}/self/{name}")),
            };
            let mut z = h[t.0].dot(w_self);
            for r in schema.relation_ids() {
                let rel = schema.relation(r);
                if rel.dst == t {
                    let w = param(p, &format!("layer{i}/rel/{}", rel.name));
                    z = z + dense_mean(&dense_adj(g, r)).dot(&h[rel.src.0]).dot(w);
                }
            }
            let mut z = act(z, i + 1 == n_layers, cfg);
            if cfg.use_residual && z.dim() == h[t.0].dim() {
                z = z + &h[t.0];
            }
            next.push(z);
        }
        for (t, z) in next.iter().enumerate() {
            blocks[t].push(z.clone());
        }
        h = next;
    }
    if cfg.concat_all {
        blocks
            .iter()
            .map(|b| concatenate(Axis(1), &b.iter().map(|x| x.view()).collect::<Vec<_>>()).unwrap())
            .collect()
    } else {
        h
    }
}

/// Homogeneous forward pass on the explicit symmetric adjacency of the
/// whole graph, features padded to a common width plus a type one-hot.
pub fn homo_oracle(g: &HeteroGraph, cfg: &ModelConfig, p: &ParamStore<f64>) -> Vec<Array2<f64>> {
    let schema = g.schema();
    let n = g.total_nodes();
    let offsets: Vec<usize> = schema
        .node_type_ids()
        .scan(0, |acc, t| {
            let o = *acc;
            *acc += g.node_count(t);
            Some(o)
        })
        .collect();
    let mut a = Array2::<f64>::zeros((n, n));
    for r in schema.relation_ids() {
        let rel = schema.relation(r);
        for (u, v) in g.adjacency(r).iter() {
            let (i, j) = (offsets[rel.src.0] + u as usize, offsets[rel.dst.0] + v as usize);
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
    }
    let max_dim = schema.node_type_ids().filter_map(|t| g.features(t).dim()).max().unwrap_or(0);
    let mut x = Array2::<f64>::zeros((n, max_dim + g.num_node_types()));
    for t in schema.node_type_ids() {
        for k in 0..g.node_count(t) {
            let row = offsets[t.0] + k;
            if let Some(f) = g.features(t).dense() {
                for j in 0..f.ncols() {
                    x[[row, j]] = f[[k, j]] as f64;
                }
            }
            x[[row, max_dim + t.0]] = 1.0;
        }
    }
    let prop = match cfg.encoder {
        EncoderKind::Gcn => {
            let a_hat = &a + &Array2::<f64>::eye(n);
            let d: Vec<f64> = a_hat.rows().into_iter().map(|r| 1.0 / r.sum().sqrt()).collect();
            Array2::from_shape_fn((n, n), |(i, j)| d[i] * a_hat[[i, j]] * d[j])
        }
        _ => dense_mean(&a),
    };
    let mut h = x.dot(param(p, "input"));
    let mut blocks = vec![h.clone()];
    let n_layers = cfg.layer_sizes.len();
    for i in 0..n_layers {
        let w = param(p, &format!("layer{i}/weight"));
        let z = match cfg.encoder {
            EncoderKind::Sage => concatenate(Axis(1), &[h.view(), prop.dot(&h).view()]).unwrap().dot(w),
            _ => prop.dot(&h).dot(w),
        };
        let mut z = act(z, i + 1 == n_layers, cfg);
        if cfg.use_residual && z.dim() == h.dim() {
            z = z + &h;
        }
        blocks.push(z.clone());
        h = z;
    }
    let all = if cfg.concat_all {
        concatenate(Axis(1), &blocks.iter().map(|b| b.view()).collect::<Vec<_>>()).unwrap()
    } else {
        h
    };
    schema
        .node_type_ids()
        .map(|t| all.slice(s![offsets[t.0]..offsets[t.0] + g.node_count(t), ..]).to_owned())
        .collect()
}

pub fn max_abs_diff(a: &[Array2<f64>], b: &[Array2<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            assert_eq!(x.dim(), y.dim());
            (x - y).iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

/// Depth, residual, concatenation and activation variations of one encoder.
pub fn encoder_variants(kind: EncoderKind) -> Vec<ModelConfig> {
    let base = ModelConfig { encoder: kind, ..ModelConfig::r_hge() };
    vec![
        ModelConfig {
            layer_sizes: vec![4, 6],
            use_residual: false,
            concat_all: false,
            ..base.clone()
        },
        ModelConfig { layer_sizes: vec![4, 4, 4], ..base.clone() },
        ModelConfig {
            layer_sizes: vec![6, 4],
            activation: Activation::Identity,
            ..base
        },
    ]
}

/// Largest deviation between the library and the dense oracle over
/// `seeds` random graphs and every variant of `kind`.
pub fn encoder_oracle_error(kind: EncoderKind, seeds: u64) -> f64 {
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let g = small_random_graph(seed);
        assert!(g.total_nodes() <= 15);
        for cfg in encoder_variants(kind) {
            let p = init_params::<f64>(&g, &cfg, seed + 100).unwrap();
            let got = encoder_forward(&g, &cfg, &p);
            let want = if kind.is_homogeneous() {
                homo_oracle(&g, &cfg, &p)
            } else {
                hetero_oracle(&g, &cfg, &p)
            };
            worst = worst.max(max_abs_diff(&got, &want));
        }
    }
    worst
}

/// Small integers, so that every sum and product is exact in f64.
pub fn integer_vector(r: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| r.random_range(-9..=9) as f64).collect()
}
