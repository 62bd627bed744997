use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{
    embedding_name, homo_weight_name, input_name, relation_name, self_name, HOMO_INPUT,
};
use super::{Activation, EncoderKind, ModelConfig, ParamStore, ParamVars};
use crate::autodiff::{Real, SparseMatrix, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{homogenize, HeteroGraph, NodeTypeId};

/// How the relations of a graph map onto the relation weights of a model
/// trained on a different graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationMapping {
    /// Explicit graph relation → model relation pairs.
    pub rename: BTreeMap<String, String>,
    /// Model relation whose weights score relations the model never saw.
    pub fallback: Option<String>,
}

impl RelationMapping {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn with_fallback(fallback: impl Into<String>) -> Self {
        Self {
            rename: BTreeMap::new(),
            fallback: Some(fallback.into()),
        }
    }

    /// Model relation used for graph relation `name`, given which relations
    /// the model knows.
    pub fn resolve(&self, name: &str, known: impl Fn(&str) -> bool) -> Option<String> {
        if let Some(to) = self.rename.get(name) {
            return known(to).then(|| to.clone());
        }
        if known(name) {
            return Some(name.to_owned());
        }
        self.fallback.as_ref().filter(|f| known(f)).cloned()
    }
}

struct TypeInput<T> {
    name: String,
    count: usize,
    features: Option<Array2<T>>,
}

struct RelInput<T> {
    src: usize,
    dst: usize,
    agg: Arc<SparseMatrix<T>>,
    /// Relation name in the parameter store.
    param: String,
}

enum Inputs<T> {
    Hetero {
        types: Vec<TypeInput<T>>,
        relations: Vec<RelInput<T>>,
    },
    Homo {
        features: Array2<T>,
        propagation: Arc<SparseMatrix<T>>,
        rows: Vec<Arc<Vec<usize>>>,
    },
}

/// Constant, graph-derived operands of the encoder: converted features and
/// normalized aggregation matrices, bound to parameter names.
pub struct GraphInputs<T> {
    kind: EncoderKind,
    inputs: Inputs<T>,
}

impl<T: Real> GraphInputs<T> {
    /// Prepares `g` for a model with `params`, checking that every weight the
    /// forward pass needs exists with the right input width.
    pub fn new(
        g: &HeteroGraph,
        cfg: &ModelConfig,
        params: &ParamStore<T>,
        mapping: &RelationMapping,
    ) -> Result<Self> {
        cfg.validate()?;
        let cast = |m: &Array2<f32>| m.mapv(|x| T::from_f64_lossy(x as f64));
        let schema = g.schema();
        let inputs = if cfg.encoder.is_homogeneous() {
            let h = homogenize(g);
            let w = params
                .get(HOMO_INPUT)
                .ok_or_else(|| missing(HOMO_INPUT))?;
            if w.nrows() != h.features.ncols() {
                return Err(Error::Dimension(format!(
                    "homogenized features have {} columns, model expects {}",
                    h.features.ncols(),
                    w.nrows()
                )));
            }
            let propagation = match cfg.encoder {
                EncoderKind::Gcn => SparseMatrix::gcn_normalized(&h.adjacency, h.num_nodes)?,
                _ => SparseMatrix::mean_aggregation(&h.adjacency, h.num_nodes, h.num_nodes)?,
            };
            let rows = schema
                .node_type_ids()
                .map(|t| Arc::new(h.type_range(t).collect()))
                .collect();
            Inputs::Homo {
                features: cast(&h.features),
                propagation: Arc::new(propagation),
                rows,
            }
        } else {
            let mut types = Vec::with_capacity(g.num_node_types());
            for t in schema.node_type_ids() {
                let name = schema.node_type(t).name.clone();
                let features = match g.features(t).dense() {
                    Some(m) => {
                        let key = input_name(&name);
                        let w = params.get(&key).ok_or_else(|| missing(&key))?;
                        if w.nrows() != m.ncols() {
                            return Err(Error::Dimension(format!(
                                "node type `{name}` has {}-dimensional features, model expects {}",
                                m.ncols(),
                                w.nrows()
                            )));
                        }
                        Some(cast(m))
                    }
                    None => {
                        let key = embedding_name(&name);
                        if !params.contains(&key) {
                            return Err(missing(&key));
                        }
                        None
                    }
                };
                types.push(TypeInput {
                    count: g.node_count(t),
                    name,
                    features,
                });
            }
            let known = |rel: &str| params.contains(&relation_name(0, rel));
            let mut relations = Vec::new();
            for r in schema.relation_ids() {
                let rel = schema.relation(r);
                let param = mapping.resolve(&rel.name, known).ok_or_else(|| {
                    Error::Transfer(format!(
                        "relation `{}` has no weights in the model and no fallback applies",
                        rel.name
                    ))
                })?;
                let agg = SparseMatrix::mean_aggregation(
                    g.adjacency(r),
                    g.node_count(rel.src),
                    g.node_count(rel.dst),
                )?;
                relations.push(RelInput {
                    src: rel.src.0,
                    dst: rel.dst.0,
                    agg: Arc::new(agg),
                    param,
                });
            }
            Inputs::Hetero { types, relations }
        };
        Ok(Self {
            kind: cfg.encoder,
            inputs,
        })
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }
}

fn missing(name: &str) -> Error {
    Error::InvalidArgument(format!("model has no parameter `{name}`"))
}

/// Encoder output: one representation matrix per node type.
#[derive(Debug, Clone)]
pub struct Representations {
    pub per_type: Vec<Var>,
}

impl Representations {
    pub fn get(&self, t: NodeTypeId) -> Var {
        self.per_type[t.0]
    }
}

fn activate<T: Real>(tape: &mut Tape<T>, x: Var, act: Activation) -> Var {
    match act {
        Activation::Relu => tape.relu(x),
        Activation::Identity => x,
    }
}

/// Full forward pass: input projection, `L` convolution layers with feature
/// dropout, residuals and (optionally) concatenation of every layer.
pub fn encode<T: Real, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    inputs: &GraphInputs<T>,
    params: &ParamVars,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut R,
) -> Result<Representations> {
    if cfg.encoder != inputs.kind {
        return Err(Error::InvalidArgument(format!(
            "inputs were prepared for {:?}, config asks for {:?}",
            inputs.kind, cfg.encoder
        )));
    }
    let n_layers = cfg.layer_sizes.len();
    let dropout_before = |i: usize| training && (i == 0 || cfg.feature_dropout_all_layers);

    match &inputs.inputs {
        Inputs::Hetero { types, relations } => {
            let mut h = Vec::with_capacity(types.len());
            for ty in types {
                let v = match &ty.features {
                    Some(x) => {
                        let x = tape.constant(x.clone());
                        let w = params.get(&input_name(&ty.name))?;
                        tape.matmul(x, w)?
                    }
                    None => {
                        let e = params.get(&embedding_name(&ty.name))?;
                        tape.broadcast_rows(e, ty.count)?
                    }
                };
                h.push(v);
            }
            let mut blocks: Vec<Vec<Var>> = h.iter().map(|&v| vec![v]).collect();

            for i in 0..n_layers {
                let (din, dout) = cfg.layer_dims(i);
                let hin: Vec<Var> = if dropout_before(i) {
                    h.iter()
                        .map(|&v| tape.dropout(v, cfg.feature_dropout_p, true, rng))
                        .collect::<Result<_>>()?
                } else {
                    h.clone()
                };
                let mut terms: Vec<Vec<Var>> = vec![Vec::new(); types.len()];
                for rel in relations {
                    let agg = tape.spmm(rel.agg.clone(), hin[rel.src])?;
                    let w = params.get(&relation_name(i, &rel.param))?;
                    terms[rel.dst].push(tape.matmul(agg, w)?);
                }
                let mut next = Vec::with_capacity(types.len());
                for (t, ty) in types.iter().enumerate() {
                    let w_self = params.get(&self_name(cfg.encoder, i, &ty.name))?;
                    terms[t].push(tape.matmul(hin[t], w_self)?);
                    let mut z = tape.add_n(&terms[t])?;
                    if i + 1 < n_layers {
                        z = activate(tape, z, cfg.activation);
                    }
                    if cfg.use_residual && din == dout {
                        z = tape.add(z, h[t])?;
                    }
                    blocks[t].push(z);
                    next.push(z);
                }
                h = next;
            }

            let per_type = if cfg.concat_all {
                blocks
                    .iter()
                    .map(|b| tape.concat_cols(b))
                    .collect::<Result<_>>()?
            } else {
                h
            };
            Ok(Representations { per_type })
        }
        Inputs::Homo {
            features,
            propagation,
            rows,
        } => {
            let x = tape.constant(features.clone());
            let w_in = params.get(HOMO_INPUT)?;
            let mut h = tape.matmul(x, w_in)?;
            let mut blocks = vec![h];
            for i in 0..n_layers {
                let (din, dout) = cfg.layer_dims(i);
                let hin = if dropout_before(i) {
                    tape.dropout(h, cfg.feature_dropout_p, true, rng)?
                } else {
                    h
                };
                let w = params.get(&homo_weight_name(i))?;
                let agg = tape.spmm(propagation.clone(), hin)?;
                let mut z = match cfg.encoder {
                    EncoderKind::Sage => {
                        let both = tape.concat_cols(&[hin, agg])?;
                        tape.matmul(both, w)?
                    }
                    _ => tape.matmul(agg, w)?,
                };
                if i + 1 < n_layers {
                    z = activate(tape, z, cfg.activation);
                }
                if cfg.use_residual && din == dout {
                    z = tape.add(z, h)?;
                }
                blocks.push(z);
                h = z;
            }
            let all = if cfg.concat_all {
                tape.concat_cols(&blocks)?
            } else {
                h
            };
            let per_type = rows
                .iter()
                .map(|r| tape.gather_rows(all, r.clone()))
                .collect::<Result<_>>()?;
            Ok(Representations { per_type })
        }
    }
}
