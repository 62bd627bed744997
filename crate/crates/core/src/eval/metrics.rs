use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Metric(format!("score {s} cannot be ranked")));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    Ok((pos, labels.len() - pos))
}

/// Area under the precision-recall curve by rank summation: the mean of
/// precision@k over the ranks k of the positives, ranking by descending score
/// with ties kept in input order.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(Error::Metric("average precision needs a positive label".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps input order among ties
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / pos as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC-ROC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the Mann-Whitney count, kept integral
    let mut twice_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut p, mut q) = (0u128, 0u128);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            if labels[order[j]] {
                p += 1;
            } else {
                q += 1;
            }
            j += 1;
        }
        twice_wins += 2 * p * neg_below + p * q;
        neg_below += q;
        i = j;
    }
    Ok(twice_wins as f64 / 2.0 / (pos as f64 * neg as f64))
}

/// Mean and sample standard deviation (`n - 1` denominator; 0 for a single
/// value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
