use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::sigmoid;
use crate::error::{Error, Result};
use crate::graph::{FeatureTable, HeteroGraph, RelationId};
use crate::train::sample_negatives;

/// Plain SGD on per-relation logistic regression over endpoint features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub negative_ratio: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.01,
            l2: 1e-5,
            negative_ratio: 1,
        }
    }
}

/// Linear weights over `[x_src ‖ x_dst]` plus a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticWeights {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticWeights {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    fn logit(&self, x_src: &[f32], x_dst: &[f32]) -> f64 {
        let (ws, wd) = self.weights.split_at(x_src.len());
        let dot = |w: &[f64], x: &[f32]| w.iter().zip(x).map(|(&w, &x)| w * x as f64).sum::<f64>();
        self.bias + dot(ws, x_src) + dot(wd, x_dst)
    }
}

/// Trained per-relation weights, keyed by relation name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SgdModel {
    pub relations: BTreeMap<String, LogisticWeights>,
}

fn dense<'a>(table: &'a FeatureTable, side: &str) -> Result<&'a ndarray::Array2<f32>> {
    table.dense().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "feature-only baseline needs input features on the {side} node type"
        ))
    })
}

/// Probabilities `σ(w · [x_src ‖ x_dst] + b)` for each pair.
pub fn sgd_baseline_score(
    src: &FeatureTable,
    dst: &FeatureTable,
    pairs: &[(u32, u32)],
    w: &LogisticWeights,
) -> Result<Vec<f64>> {
    let (xs, xd) = (dense(src, "source")?, dense(dst, "destination")?);
    if xs.ncols() + xd.ncols() != w.weights.len() {
        return Err(Error::Dimension(format!(
            "{} + {} feature columns, {} weights",
            xs.ncols(),
            xd.ncols(),
            w.weights.len()
        )));
    }
    pairs
        .iter()
        .map(|&(u, v)| {
            let (u, v) = (u as usize, v as usize);
            if u >= xs.nrows() || v >= xd.nrows() {
                return Err(Error::IndexOutOfRange(format!("pair ({u}, {v})")));
            }
            let a = xs.row(u);
            let b = xd.row(v);
            Ok(sigmoid(w.logit(
                a.as_slice().expect("standard layout"),
                b.as_slice().expect("standard layout"),
            )))
        })
        .collect()
}

/// Fits one logistic regression on labelled pairs.
pub(crate) fn fit_logistic(
    src: &FeatureTable,
    dst: &FeatureTable,
    examples: &mut [((u32, u32), bool)],
    cfg: &SgdConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LogisticWeights> {
    let (xs, xd) = (dense(src, "source")?, dense(dst, "destination")?);
    let ds = xs.ncols();
    let mut w = LogisticWeights::zeros(ds + xd.ncols());
    for _ in 0..cfg.epochs {
        examples.shuffle(rng);
        for &((u, v), label) in examples.iter() {
            let a = xs.row(u as usize);
            let b = xd.row(v as usize);
            let (a, b) = (a.as_slice().unwrap(), b.as_slice().unwrap());
            let p = sigmoid(w.logit(a, b));
            let err = p - if label { 1.0 } else { 0.0 };
            let lr = cfg.learning_rate;
            for (wi, &x) in w.weights.iter_mut().zip(a.iter().chain(b)) {
                *wi -= lr * (err * x as f64 + cfg.l2 * *wi);
            }
            w.bias -= lr * err;
        }
    }
    Ok(w)
}

/// Trains one logistic regression per target relation against sampled
/// negatives.
pub fn train_sgd(g: &HeteroGraph, cfg: &SgdConfig, seed: u64) -> Result<SgdModel> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidArgument("epochs must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut relations = BTreeMap::new();
    for r in g.target_relations() {
        let rel = g.relation(r);
        let mut examples: Vec<((u32, u32), bool)> =
            g.adjacency(r).iter().map(|p| (p, true)).collect();
        let neg = sample_negatives(g, r, cfg.negative_ratio, &mut rng)?;
        examples.extend(neg.into_iter().map(|p| (p, false)));
        let w = fit_logistic(
            g.features(rel.src),
            g.features(rel.dst),
            &mut examples,
            cfg,
            &mut rng,
        )?;
        relations.insert(rel.name.clone(), w);
    }
    Ok(SgdModel { relations })
}

impl SgdModel {
    /// Scores pairs of relation `r` of `g` with the weights of the relation
    /// named `model_relation`.
    pub fn score(
        &self,
        g: &HeteroGraph,
        r: RelationId,
        model_relation: &str,
        pairs: &[(u32, u32)],
    ) -> Result<Vec<f64>> {
        let rel = g.relation(r);
        let w = self.relations.get(model_relation).ok_or_else(|| {
            Error::Transfer(format!("baseline has no weights for `{model_relation}`"))
        })?;
        sgd_baseline_score(g.features(rel.src), g.features(rel.dst), pairs, w)
    }
}
