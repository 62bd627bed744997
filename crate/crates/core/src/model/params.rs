use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EncoderKind, ModelConfig};
use crate::autodiff::{Real, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{homogenize, HeteroGraph};

/// Named weight matrices, ordered by name.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T> {
    params: BTreeMap<String, Array2<T>>,
}

impl<T> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            params: BTreeMap::new(),
        }
    }
}

impl<T: Real> ParamStore<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<T>) -> Result<()> {
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {}", name.into())));
        }
        self.params.insert(name.into(), value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Array2<T>> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array2<T>> {
        self.params.get_mut(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Array2<T>)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Array2<T>)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn num_scalars(&self) -> usize {
        self.params.values().map(Array2::len).sum()
    }

    /// Same matrices converted to another precision.
    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), v.mapv(|x| U::from_f64_lossy(x.to_f64_lossy()))))
                .collect(),
        }
    }

    /// Puts every matrix on the tape as a leaf.
    pub fn to_tape(&self, tape: &mut Tape<T>) -> ParamVars {
        ParamVars {
            vars: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), tape.leaf_array(v.clone())))
                .collect(),
        }
    }

    /// Like [`ParamStore::to_tape`] but with externally created leaves, in
    /// name order. Used by gradient checking.
    pub fn bind(&self, vars: &[Var]) -> Result<ParamVars> {
        if vars.len() != self.params.len() {
            return Err(Error::InvalidArgument(format!(
                "{} variables for {} parameters",
                vars.len(),
                self.params.len()
            )));
        }
        Ok(ParamVars {
            vars: self.params.keys().cloned().zip(vars.iter().copied()).collect(),
        })
    }
}

/// Tape handles of the parameters of one forward pass.
#[derive(Debug, Clone)]
pub struct ParamVars {
    vars: BTreeMap<String, Var>,
}

impl ParamVars {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("model has no parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

pub(crate) fn input_name(node_type: &str) -> String {
    format!("input/{node_type}")
}

pub(crate) fn embedding_name(node_type: &str) -> String {
    format!("embed/{node_type}")
}

pub(crate) fn relation_name(layer: usize, relation: &str) -> String {
    format!("layer{layer}/rel/{relation}")
}

pub(crate) fn self_name(kind: EncoderKind, layer: usize, node_type: &str) -> String {
    match kind {
        EncoderKind::Rgcn => format!("layer{layer}/self"),
        _ => format!("layer{layer}/self/{node_type}"),
    }
}

pub(crate) fn homo_weight_name(layer: usize) -> String {
    format!("layer{layer}/weight")
}

pub(crate) const HOMO_INPUT: &str = "input";

fn glorot<T: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<T> {
    glorot_wide(rows, rows, cols, rng)
}

/// Glorot bound computed for `fan_in` inputs, drawn for a `rows × cols` block.
fn glorot_wide<T: Real, R: Rng>(fan_in: usize, rows: usize, cols: usize, rng: &mut R) -> Array2<T> {
    let a = (6.0 / (fan_in + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || T::from_f64_lossy(rng.random_range(-a..a)))
}

/// Glorot-uniform initialization of every weight the encoder needs on `g`.
pub fn init_params<T: Real>(g: &HeteroGraph, cfg: &ModelConfig, seed: u64) -> Result<ParamStore<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new();
    let s0 = cfg.layer_sizes[0];
    let schema = g.schema();

    if cfg.encoder.is_homogeneous() {
        let h = homogenize(g);
        store.insert(HOMO_INPUT, glorot(h.features.ncols(), s0, &mut rng))?;
        for (i, _) in cfg.layer_sizes.iter().enumerate() {
            let (din, dout) = cfg.layer_dims(i);
            let fan_in = match cfg.encoder {
                EncoderKind::Sage => 2 * din,
                _ => din,
            };
            store.insert(homo_weight_name(i), glorot(fan_in, dout, &mut rng))?;
        }
        return Ok(store);
    }

    for t in schema.node_type_ids() {
        let name = &schema.node_type(t).name;
        match g.features(t).dim() {
            Some(d) => store.insert(input_name(name), glorot(d, s0, &mut rng))?,
            None => store.insert(embedding_name(name), glorot(1, s0, &mut rng))?,
        }
    }
    // Messages summed into a type act as one wide linear map, so the fan-in
    // counts every incoming term (relations plus the self term).
    let mut terms = vec![1usize; schema.node_type_ids().count()];
    for r in schema.relation_ids() {
        terms[schema.relation(r).dst.0] += 1;
    }
    let widest = terms.iter().copied().max().unwrap_or(1);
    for (i, _) in cfg.layer_sizes.iter().enumerate() {
        let (din, dout) = cfg.layer_dims(i);
        for r in schema.relation_ids() {
            let k = terms[schema.relation(r).dst.0];
            store.insert(
                relation_name(i, &schema.relation(r).name),
                glorot_wide(k * din, din, dout, &mut rng),
            )?;
        }
        match cfg.encoder {
            EncoderKind::Rgcn => store.insert(
                self_name(cfg.encoder, i, ""),
                glorot_wide(widest * din, din, dout, &mut rng),
            )?,
            _ => {
                for t in schema.node_type_ids() {
                    store.insert(
                        self_name(cfg.encoder, i, &schema.node_type(t).name),
                        glorot_wide(terms[t.0] * din, din, dout, &mut rng),
                    )?;
                }
            }
        }
    }
    Ok(store)
}
