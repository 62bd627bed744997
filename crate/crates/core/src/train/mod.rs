//! Negative sampling, edge dropout, the cross-entropy objective, Adam and the
//! full-batch training loop.

mod adam;
mod loss;
mod sampling;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, RelationId};
use crate::model::{
    encode, init_params, Checkpoint, DecoderKind, GraphInputs, ModelConfig, ParamStore,
    RelationMapping, SgdModel,
};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{
    bce_loss, bce_loss_macro, build_loss, check_loss_gradient, LossBatch, LossOutput,
    RelationBatch,
};
pub use sampling::{
    apply_drop_masks, corrupt_destinations, derive_seed, droppable_relations, edge_dropout,
    edge_dropout_masks, sample_negatives, DropMask,
};

/// Optimization settings of the GNN training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Negatives drawn per positive edge, every epoch.
    pub negative_ratio: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 1e-4,
            negative_ratio: 1,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    /// Defaults with the larger step size of 0.01.
    pub fn large_step() -> Self {
        Self {
            learning_rate: 0.01,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if self.negative_ratio == 0 {
            return Err(Error::InvalidArgument("negative ratio must be at least 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Target relations with at least one edge, i.e. the terms of the loss.
pub fn loss_relations(g: &HeteroGraph) -> Result<Vec<RelationId>> {
    let rels: Vec<RelationId> = g
        .target_relations()
        .into_iter()
        .filter(|&r| !g.relation(r).is_meta && g.num_edges(r) > 0)
        .collect();
    if rels.is_empty() {
        return Err(Error::InvalidArgument(
            "graph has no target relation with edges".into(),
        ));
    }
    Ok(rels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub loss: f64,
    /// Same order as [`LossHistory::relations`].
    pub per_relation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossHistory {
    pub relations: Vec<String>,
    pub epochs: Vec<EpochLoss>,
}

impl LossHistory {
    pub fn first(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.loss)
    }

    pub fn last(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    /// CSV with columns `epoch,loss` and one `loss_<relation>` column per
    /// target relation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["epoch".to_owned(), "loss".to_owned()];
        header.extend(self.relations.iter().map(|r| format!("loss_{r}")));
        w.write_record(&header)?;
        for e in &self.epochs {
            let mut row = vec![e.epoch.to_string(), e.loss.to_string()];
            row.extend(e.per_relation.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Trained weights of either model family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gnn {
        config: ModelConfig,
        params: ParamStore<f32>,
    },
    Sgd(SgdModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub history: LossHistory,
}

impl TrainedModel {
    pub fn checkpoint(&self) -> Checkpoint {
        match &self.model {
            Model::Gnn { config, params } => Checkpoint::gnn(config, params),
            Model::Sgd(m) => Checkpoint::Sgd { model: m.clone() },
        }
    }
}

impl Model {
    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        match c {
            Checkpoint::Sgd { model } => Ok(Model::Sgd(model.clone())),
            Checkpoint::Gnn { .. } => {
                let (config, params) = c.to_gnn()?;
                Ok(Model::Gnn { config, params })
            }
        }
    }

    /// Frozen inference on `g`: representations are computed once, in
    /// evaluation mode.
    pub fn scorer<'a>(&'a self, g: &'a HeteroGraph, mapping: &RelationMapping) -> Result<Scorer<'a>> {
        let inner = match self {
            Model::Gnn { config, params } => {
                let inputs = GraphInputs::new(g, config, params, mapping)?;
                let mut tape = Tape::new();
                let vars = params.to_tape(&mut tape);
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let reps = encode(&mut tape, &inputs, &vars, config, false, &mut rng)?;
                let reps = reps.per_type.iter().map(|&v| tape.value(v).clone()).collect();
                ScorerKind::Gnn {
                    reps,
                    decoder: config.decoder(),
                }
            }
            Model::Sgd(m) => {
                let known = |n: &str| m.relations.contains_key(n);
                let mut names = BTreeMap::new();
                for r in g.target_relations() {
                    if let Some(to) = mapping.resolve(&g.relation(r).name, known) {
                        names.insert(r, to);
                    }
                }
                ScorerKind::Sgd { model: m, names }
            }
        };
        Ok(Scorer { graph: g, inner })
    }
}

enum ScorerKind<'a> {
    Gnn {
        reps: Vec<Array2<f32>>,
        decoder: DecoderKind,
    },
    Sgd {
        model: &'a SgdModel,
        names: BTreeMap<RelationId, String>,
    },
}

/// Scores candidate edges of a graph with a frozen model.
pub struct Scorer<'a> {
    graph: &'a HeteroGraph,
    inner: ScorerKind<'a>,
}

impl Scorer<'_> {
    /// Higher means more likely; only the order is meaningful across models.
    pub fn score(&self, r: RelationId, pairs: &[(u32, u32)]) -> Result<Vec<f64>> {
        let rel = self.graph.relation(r);
        match &self.inner {
            ScorerKind::Gnn { reps, decoder } => {
                let (hs, hd) = (&reps[rel.src.0], &reps[rel.dst.0]);
                let split = decoder.split(hs.ncols())?;
                pairs
                    .iter()
                    .map(|&(u, v)| {
                        let (u, v) = (u as usize, v as usize);
                        if u >= hs.nrows() || v >= hd.nrows() {
                            return Err(Error::IndexOutOfRange(format!(
                                "pair ({u}, {v}) of relation `{}`",
                                rel.name
                            )));
                        }
                        let (a, b) = (hs.row(u), hd.row(v));
                        Ok(split
                            .src
                            .iter()
                            .zip(split.dst.iter())
                            .map(|(&i, &j)| a[i] as f64 * b[j] as f64)
                            .sum())
                    })
                    .collect()
            }
            ScorerKind::Sgd { model, names } => {
                let name = names.get(&r).ok_or_else(|| {
                    Error::Transfer(format!(
                        "relation `{}` has no baseline weights and no fallback applies",
                        rel.name
                    ))
                })?;
                model.score(self.graph, r, name, pairs)
            }
        }
    }
}

/// Full-batch training. Each epoch draws an edge-dropout view for message
/// passing and fresh negatives, while positives always come from the
/// complete target edge sets of `g`.
pub fn train(g: &HeteroGraph, model_cfg: &ModelConfig, cfg: &TrainConfig) -> Result<TrainedModel> {
    train_with_progress(g, model_cfg, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    g: &HeteroGraph,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLoss),
) -> Result<TrainedModel> {
    cfg.validate()?;
    model_cfg.validate()?;
    let targets = loss_relations(g)?;
    let mut params = init_params::<f32>(g, model_cfg, derive_seed(cfg.seed, u64::MAX))?;
    let mut state = AdamState::new(&params);
    let adam = cfg.adam();
    let mapping = RelationMapping::identity();
    let static_inputs = if model_cfg.edge_dropout_p == 0.0 {
        Some(GraphInputs::new(g, model_cfg, &params, &mapping)?)
    } else {
        None
    };
    let mut history = LossHistory {
        relations: targets.iter().map(|&r| g.relation(r).name.clone()).collect(),
        epochs: Vec::with_capacity(cfg.epochs),
    };

    for epoch in 0..cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64));
        let dropped;
        let inputs = match &static_inputs {
            Some(i) => i,
            None => {
                let view = edge_dropout(g, model_cfg.edge_dropout_p, &mut rng)?;
                dropped = GraphInputs::new(&view, model_cfg, &params, &mapping)?;
                &dropped
            }
        };
        let batch = LossBatch::sample(g, &targets, cfg.negative_ratio, &mut rng)?;
        let mut tape = Tape::new();
        let vars = params.to_tape(&mut tape);
        let out = build_loss(&mut tape, inputs, &vars, model_cfg, &batch, true, &mut rng)?;
        let loss = tape.scalar(out.loss) as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        let per = loss::relation_losses(&tape, &out, &batch);
        let grads = tape.backward(out.loss)?;
        let named: BTreeMap<String, Array2<f32>> = vars
            .iter()
            .filter_map(|(n, v)| grads.get(v).map(|g| (n.to_owned(), g.clone())))
            .collect();
        drop(tape);
        adam_step(&mut params, &named, &mut state, &adam)?;

        let mut per_relation = vec![f64::NAN; targets.len()];
        for (rb, l) in batch.relations.iter().zip(per) {
            let k = targets.iter().position(|&r| r == rb.relation).expect("batch relation");
            per_relation[k] = l;
        }
        let e = EpochLoss {
            epoch,
            loss,
            per_relation,
        };
        on_epoch(&e);
        history.epochs.push(e);
    }
    Ok(TrainedModel {
        model: Model::Gnn {
            config: model_cfg.clone(),
            params,
        },
        history,
    })
}
