use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sampling::{derive_seed, edge_dropout, sample_negatives};
use crate::autodiff::{grad_check, softplus, GradCheckConfig, GradCheckReport, Real, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, NodeTypeId, RelationId};
use crate::model::{encode, init_params, score_pairs, GraphInputs, ModelConfig, ParamVars, RelationMapping};

/// `-log σ(s)` for positives and `-log(1 - σ(s))` for negatives, averaged
/// over all samples.
pub fn bce_loss(pos_logits: &[f64], neg_logits: &[f64]) -> Result<f64> {
    let n = pos_logits.len() + neg_logits.len();
    if n == 0 {
        return Err(Error::InvalidArgument("loss needs at least one score".into()));
    }
    if let Some(s) = pos_logits.iter().chain(neg_logits).find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let pos: f64 = pos_logits.iter().map(|&s| softplus(-s)).sum();
    let neg: f64 = neg_logits.iter().map(|&s| softplus(s)).sum();
    Ok((pos + neg) / n as f64)
}

/// [`bce_loss`] per relation, then the unweighted mean over relations.
pub fn bce_loss_macro(per_relation: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if per_relation.is_empty() {
        return Err(Error::InvalidArgument("loss needs at least one relation".into()));
    }
    let mut total = 0.0;
    for (p, n) in per_relation {
        total += bce_loss(p, n)?;
    }
    Ok(total / per_relation.len() as f64)
}

/// Labelled pairs of one target relation.
#[derive(Debug, Clone)]
pub struct RelationBatch {
    pub relation: RelationId,
    pub src_type: NodeTypeId,
    pub dst_type: NodeTypeId,
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
}

/// Pairs scored by one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossBatch {
    pub relations: Vec<RelationBatch>,
}

impl LossBatch {
    /// All edges of every non-empty target relation of `g`, with `k` fresh
    /// negatives each.
    pub fn sample<R: Rng + ?Sized>(g: &HeteroGraph, targets: &[RelationId], k: usize, rng: &mut R) -> Result<Self> {
        let mut relations = Vec::with_capacity(targets.len());
        for &r in targets {
            if g.num_edges(r) == 0 {
                continue;
            }
            let rel = g.relation(r);
            relations.push(RelationBatch {
                relation: r,
                src_type: rel.src,
                dst_type: rel.dst,
                positives: g.adjacency(r).iter().collect(),
                negatives: sample_negatives(g, r, k, rng)?,
            });
        }
        if relations.is_empty() {
            return Err(Error::InvalidArgument("no target relation has edges".into()));
        }
        Ok(Self { relations })
    }
}

/// Scalar loss and the per-relation logit columns (positives first).
pub struct LossOutput {
    pub loss: Var,
    pub logits: Vec<Var>,
}

/// Encodes, scores every pair of the batch and returns the macro-averaged
/// cross-entropy as one tape node.
pub fn build_loss<T: Real, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    inputs: &GraphInputs<T>,
    params: &ParamVars,
    cfg: &ModelConfig,
    batch: &LossBatch,
    training: bool,
    rng: &mut R,
) -> Result<LossOutput> {
    let reps = encode(tape, inputs, params, cfg, training, rng)?;
    let split = cfg.decoder().split(cfg.output_dim())?;
    let n_rel = T::from_usize(batch.relations.len()).unwrap();
    let mut logits = Vec::with_capacity(batch.relations.len());
    let mut labels = Vec::new();
    let mut weights = Vec::new();
    for rb in &batch.relations {
        let pairs = rb.positives.iter().chain(&rb.negatives);
        let src: Vec<usize> = pairs.clone().map(|p| p.0 as usize).collect();
        let dst: Vec<usize> = pairs.map(|p| p.1 as usize).collect();
        let n = src.len();
        let s = score_pairs(
            tape,
            reps.get(rb.src_type),
            reps.get(rb.dst_type),
            Arc::new(src),
            Arc::new(dst),
            &split,
        )?;
        logits.push(s);
        labels.extend((0..n).map(|i| if i < rb.positives.len() { T::one() } else { T::zero() }));
        let w = T::one() / (T::from_usize(n).unwrap() * n_rel);
        weights.extend(std::iter::repeat_n(w, n));
    }
    let all = tape.concat_rows(&logits)?;
    let loss = tape.bce_with_logits(all, Arc::new(labels), Arc::new(weights))?;
    Ok(LossOutput { loss, logits })
}

/// Per-relation cross-entropy of a finished forward pass.
pub(crate) fn relation_losses<T: Real>(tape: &Tape<T>, out: &LossOutput, batch: &LossBatch) -> Vec<f64> {
    out.logits
        .iter()
        .zip(&batch.relations)
        .map(|(&v, rb)| {
            let s: Vec<f64> = tape.value(v).iter().map(|x| x.to_f64_lossy()).collect();
            let (p, n) = s.split_at(rb.positives.len());
            bce_loss(p, n).unwrap_or(f64::NAN)
        })
        .collect()
}

/// Finite-difference check of the complete training loss (edge dropout,
/// feature dropout, encoder, decoder, cross-entropy) in `f64`. Dropout masks
/// and negatives are drawn once from `seed` and held fixed.
pub fn check_loss_gradient(
    g: &HeteroGraph,
    cfg: &ModelConfig,
    seed: u64,
    grad_cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let params = init_params::<f64>(g, cfg, derive_seed(seed, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let view = edge_dropout(g, cfg.edge_dropout_p, &mut rng)?;
    let targets = super::loss_relations(g)?;
    let batch = LossBatch::sample(g, &targets, 1, &mut rng)?;
    let inputs = GraphInputs::new(&view, cfg, &params, &RelationMapping::identity())?;
    let names: Vec<String> = params.names().map(str::to_owned).collect();
    let values: Vec<_> = params.iter().map(|(_, a)| a.clone()).collect();
    let feature_seed = derive_seed(seed, 2);
    let report = grad_check(
        |tape, vars| {
            let pv = params.bind(vars)?;
            let mut rng = ChaCha8Rng::seed_from_u64(feature_seed);
            Ok(build_loss(tape, &inputs, &pv, cfg, &batch, true, &mut rng)?.loss)
        },
        &values,
        grad_cfg,
    )?;
    Ok(report.with_names(&names))
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::model::Activation;

    #[test]
    fn zero_logits_cost_ln_two() {
        let l = bce_loss(&[0.0, 0.0], &[0.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_separation_costs_nothing() {
        assert!(bce_loss(&[800.0], &[-800.0]).unwrap() < 1e-300);
        assert!(bce_loss(&[40.0, 35.0], &[-50.0]).unwrap() < 1e-15);
    }

    #[test]
    fn matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pos: Vec<f64> = (0..rng.random_range(0..20)).map(|_| rng.random_range(-6.0..6.0)).collect();
            let neg: Vec<f64> = (0..rng.random_range(1..20)).map(|_| rng.random_range(-6.0..6.0)).collect();
            let sig = |s: f64| 1.0 / (1.0 + (-s).exp());
            let direct = (pos.iter().map(|&s| -sig(s).ln()).sum::<f64>()
                + neg.iter().map(|&s| -(1.0 - sig(s)).ln()).sum::<f64>())
                / (pos.len() + neg.len()) as f64;
            assert!((bce_loss(&pos, &neg).unwrap() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn macro_average_over_relations() {
        let a = bce_loss(&[1.0], &[0.5, -2.0]).unwrap();
        let b = bce_loss(&[-1.0, 3.0], &[]).unwrap();
        let m = bce_loss_macro(&[(vec![1.0], vec![0.5, -2.0]), (vec![-1.0, 3.0], vec![])]).unwrap();
        assert!((m - (a + b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(bce_loss(&[], &[]).is_err());
        assert!(matches!(bce_loss(&[f64::NAN], &[]), Err(Error::NonFinite(_))));
        assert!(matches!(bce_loss(&[1.0], &[f64::INFINITY]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn tape_loss_matches_standalone_loss() {
        let g = crate::train::tests::ten_node_graph();
        let cfg = ModelConfig {
            activation: Activation::Relu,
            ..ModelConfig::r_hge().with_width(4, 2)
        };
        let params = init_params::<f64>(&g, &cfg, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let targets = crate::train::loss_relations(&g).unwrap();
        let batch = LossBatch::sample(&g, &targets, 2, &mut rng).unwrap();
        let inputs = GraphInputs::new(&g, &cfg, &params, &RelationMapping::identity()).unwrap();
        let mut tape = Tape::new();
        let pv = params.to_tape(&mut tape);
        let out = build_loss(&mut tape, &inputs, &pv, &cfg, &batch, false, &mut rng).unwrap();
        let per = relation_losses(&tape, &out, &batch);
        let expected = per.iter().sum::<f64>() / per.len() as f64;
        assert!((tape.scalar(out.loss) - expected).abs() < 1e-12);
    }
}
