use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ParamStore, SgdModel};
use crate::error::{Error, Result};

/// A weight matrix with its shape header. Values are stored widened to `f64`,
/// which makes the text round trip exact for `f32` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl NamedMatrix {
    pub fn from_array(name: &str, a: &Array2<f32>) -> Self {
        Self {
            name: name.to_owned(),
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.iter().map(|&x| x as f64).collect(),
        }
    }

    pub fn to_array(&self) -> Result<Array2<f32>> {
        let data = self.data.iter().map(|&x| x as f32).collect();
        Array2::from_shape_vec((self.rows, self.cols), data).map_err(|e| {
            Error::Dimension(format!("checkpoint matrix `{}`: {e}", self.name))
        })
    }
}

/// Serialized trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Checkpoint {
    Gnn {
        config: ModelConfig,
        params: Vec<NamedMatrix>,
    },
    Sgd {
        model: SgdModel,
    },
}

impl Checkpoint {
    pub fn gnn(config: &ModelConfig, params: &ParamStore<f32>) -> Self {
        Checkpoint::Gnn {
            config: config.clone(),
            params: params
                .iter()
                .map(|(n, a)| NamedMatrix::from_array(n, a))
                .collect(),
        }
    }

    /// Config and weights of a GNN checkpoint.
    pub fn to_gnn(&self) -> Result<(ModelConfig, ParamStore<f32>)> {
        match self {
            Checkpoint::Gnn { config, params } => {
                config.validate()?;
                let mut store = ParamStore::new();
                for m in params {
                    store.insert(m.name.clone(), m.to_array()?)?;
                }
                Ok((config.clone(), store))
            }
            Checkpoint::Sgd { .. } => Err(Error::InvalidArgument(
                "checkpoint holds the feature-only baseline, not a GNN".into(),
            )),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn gnn_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut store = ParamStore::<f32>::new();
        store
            .insert("a", Array2::from_shape_simple_fn((3, 5), || rng.random::<f32>() * 1e-3))
            .unwrap();
        store
            .insert(
                "b",
                Array2::from_shape_simple_fn((7, 2), || f32::from_bits(rng.random_range(0..0x7f00_0000))),
            )
            .unwrap();
        let cfg = ModelConfig::hge();
        let ck = Checkpoint::gnn(&cfg, &store);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        let (cfg2, store2) = back.to_gnn().unwrap();
        assert_eq!(cfg2, cfg);
        assert_eq!(store2, store);
    }

    #[test]
    fn shape_header_mismatch_is_an_error() {
        let m = NamedMatrix {
            name: "w".into(),
            rows: 2,
            cols: 2,
            data: vec![1.0; 3],
        };
        assert!(m.to_array().is_err());
    }
}
