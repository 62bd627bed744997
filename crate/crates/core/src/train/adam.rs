use std::collections::BTreeMap;

use ndarray::{Array2, Zip};

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::model::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: BTreeMap<String, Array2<T>>,
    pub v: BTreeMap<String, Array2<T>>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(params: &ParamStore<T>) -> Self {
        let zeros = || {
            params
                .iter()
                .map(|(k, p)| (k.to_owned(), Array2::zeros(p.dim())))
                .collect()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Parameters without a gradient get a zero
/// gradient (their moments still decay).
pub fn adam_step<T: Real>(
    params: &mut ParamStore<T>,
    grads: &BTreeMap<String, Array2<T>>,
    state: &mut AdamState<T>,
    cfg: &AdamConfig,
) -> Result<()> {
    for (name, g) in grads {
        let p = params
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("gradient for unknown parameter `{name}`")))?;
        if p.dim() != g.dim() {
            return Err(Error::Shape {
                op: "adam_step",
                detail: format!("`{name}`: parameter {:?}, gradient {:?}", p.dim(), g.dim()),
            });
        }
    }
    state.step += 1;
    let t = state.step as f64;
    let b1 = T::from_f64_lossy(cfg.beta1);
    let b2 = T::from_f64_lossy(cfg.beta2);
    let c1 = T::one() - b1;
    let c2 = T::one() - b2;
    // step size with both bias corrections folded in
    let alpha = T::from_f64_lossy(
        cfg.learning_rate * (1.0 - cfg.beta2.powf(t)).sqrt() / (1.0 - cfg.beta1.powf(t)),
    );
    let eps_hat = T::from_f64_lossy(cfg.epsilon * (1.0 - cfg.beta2.powf(t)).sqrt());
    for (name, p) in params.iter_mut() {
        let (Some(m), Some(v)) = (state.m.get_mut(name), state.v.get_mut(name)) else {
            return Err(Error::InvalidArgument(format!(
                "optimizer state has no moments for `{name}`"
            )));
        };
        match grads.get(name) {
            Some(g) => Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
                *m = b1 * *m + c1 * g;
                *v = b2 * *v + c2 * g * g;
                *p = *p - alpha * *m / (v.sqrt() + eps_hat);
            }),
            None => Zip::from(p).and(m).and(v).for_each(|p, m, v| {
                *m = b1 * *m;
                *v = b2 * *v;
                *p = *p - alpha * *m / (v.sqrt() + eps_hat);
            }),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    fn store(x: f64) -> ParamStore<f64> {
        let mut p = ParamStore::new();
        p.insert("x", array![[x]]).unwrap();
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = store(1.5);
        let mut s = AdamState::new(&p);
        let g = BTreeMap::from([("x".to_owned(), array![[0.0]])]);
        adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p.get("x").unwrap()[[0, 0]], 1.5);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        for g0 in [3.0, -0.01, 250.0] {
            let mut p = store(0.0);
            let mut s = AdamState::new(&p);
            let cfg = AdamConfig {
                learning_rate: 0.01,
                ..Default::default()
            };
            let g = BTreeMap::from([("x".to_owned(), array![[g0]])]);
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
            let moved = p.get("x").unwrap()[[0, 0]];
            assert!((moved.abs() - 0.01).abs() < 1e-6, "{moved}");
            assert_eq!(moved.signum(), -g0.signum());
        }
    }

    #[test]
    fn converges_on_a_parabola() {
        let mut p = store(0.0);
        let mut s = AdamState::new(&p);
        let cfg = AdamConfig {
            learning_rate: 0.05,
            ..Default::default()
        };
        for _ in 0..2000 {
            let x = p.get("x").unwrap()[[0, 0]];
            let g = BTreeMap::from([("x".to_owned(), array![[2.0 * (x - 2.0)]])]);
            adam_step(&mut p, &g, &mut s, &cfg).unwrap();
        }
        assert!((p.get("x").unwrap()[[0, 0]] - 2.0).abs() < 0.01);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut p = store(0.0);
        let mut s = AdamState::new(&p);
        let g = BTreeMap::from([("x".to_owned(), array![[1.0, 2.0]])]);
        assert!(matches!(
            adam_step(&mut p, &g, &mut s, &AdamConfig::default()),
            Err(Error::Shape { .. })
        ));
        assert_eq!(s.step, 0);
    }
}
