//! Temporal splits, ranking metrics, per-fold evaluation and the transfer
//! matrix.

mod metrics;
mod report;
mod split;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::{corrupt_destinations, derive_seed, Scorer};

pub use metrics::{auc_roc, average_precision, mean_std};
pub use report::{macro_average, CellMetrics, MetricRow, MetricsReport, Summary};
pub use split::{temporal_folds, test_subsamples, Induction, SplitPlan, TestRelation, TestView};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_folds: usize,
    pub subsample_fraction: f64,
    pub subsample_count: usize,
    /// Node type whose dates drive the split.
    pub dated_type: String,
    /// Seeds subsamples and negatives; independent of the model.
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_folds: 5,
            subsample_fraction: 0.9,
            subsample_count: 5,
            dated_type: "case".into(),
            seed: 0,
        }
    }
}

/// Row labels of an evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalLabels<'a> {
    pub model: &'a str,
    pub dataset: &'a str,
}

/// Scores every subsample of a fold's hidden edges against one corrupted
/// destination per positive. Subsamples and negatives depend only on
/// `cfg.seed`, the fold, the subsample and the relation, so every model sees
/// the same candidates.
pub fn evaluate_view(
    scorer: &Scorer<'_>,
    view: &TestView,
    fold: usize,
    cfg: &EvalConfig,
    labels: EvalLabels<'_>,
) -> Result<MetricsReport> {
    let tagged: Vec<(usize, (u32, u32))> = view
        .relations
        .iter()
        .enumerate()
        .flat_map(|(i, tr)| tr.positives.iter().map(move |&e| (i, e)))
        .collect();
    let fold_seed = derive_seed(cfg.seed, fold as u64);
    let subsamples = test_subsamples(&tagged, cfg.subsample_fraction, cfg.subsample_count, fold_seed)?;
    let mut report = MetricsReport::new();
    for (s, sub) in subsamples.iter().enumerate() {
        let sub_seed = derive_seed(fold_seed, s as u64);
        for (i, tr) in view.relations.iter().enumerate() {
            let positives: Vec<(u32, u32)> = sub.iter().filter(|(j, _)| *j == i).map(|&(_, e)| e).collect();
            if positives.is_empty() {
                continue;
            }
            let rel = view.graph.relation(tr.relation);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sub_seed, i as u64));
            let negatives = corrupt_destinations(
                &positives,
                &tr.known,
                view.graph.node_count(rel.dst),
                1,
                &mut rng,
            )?;
            let mut scores = scorer.score(tr.relation, &positives)?;
            scores.extend(scorer.score(tr.relation, &negatives)?);
            let truth: Vec<bool> = (0..scores.len()).map(|k| k < positives.len()).collect();
            report.rows.push(MetricRow {
                model: labels.model.to_owned(),
                dataset: labels.dataset.to_owned(),
                fold,
                subsample: s,
                relation: tr.name.clone(),
                ap: average_precision(&scores, &truth)?,
                auc_roc: auc_roc(&scores, &truth)?,
            });
        }
    }
    if report.rows.is_empty() {
        return Err(Error::Metric(format!("fold {fold} produced no scored relation")));
    }
    Ok(report)
}

/// Train-dataset × evaluation-dataset grid of mean metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub datasets: Vec<String>,
    /// `ap[i][j]`: trained on dataset `i`, evaluated on dataset `j`.
    pub ap: Vec<Vec<f64>>,
    pub auc_roc: Vec<Vec<f64>>,
    /// Semi-inductive reference score of each dataset, if known.
    pub reference_ap: Option<Vec<f64>>,
    pub reference_auc_roc: Option<Vec<f64>>,
}

impl TransferMatrix {
    /// Builds the grid from a report whose rows carry model label
    /// `<prefix><train dataset>` and dataset label `<eval dataset>`.
    pub fn from_report(report: &MetricsReport, datasets: &[String], prefix: &str) -> Result<Self> {
        let n = datasets.len();
        let mut ap = vec![vec![f64::NAN; n]; n];
        let mut auc = vec![vec![f64::NAN; n]; n];
        for (i, a) in datasets.iter().enumerate() {
            for (j, b) in datasets.iter().enumerate() {
                let s = report.summary(&format!("{prefix}{a}"), b).map_err(|_| {
                    Error::Transfer(format!("no results for {a} → {b}"))
                })?;
                ap[i][j] = s.ap.0;
                auc[i][j] = s.auc_roc.0;
            }
        }
        Ok(Self {
            datasets: datasets.to_vec(),
            ap,
            auc_roc: auc,
            reference_ap: None,
            reference_auc_roc: None,
        })
    }

    pub fn is_complete(&self) -> bool {
        self.ap.iter().chain(&self.auc_roc).flatten().all(|v| v.is_finite())
    }

    /// Markdown grids of both metrics (%), with deviations in parentheses
    /// when references are set.
    pub fn markdown(&self) -> String {
        let mut s = String::new();
        for (name, m, r) in [
            ("AP", &self.ap, &self.reference_ap),
            ("AUC-ROC", &self.auc_roc, &self.reference_auc_roc),
        ] {
            let dev = r.as_ref().and_then(|r| deviation_matrix(m, r).ok());
            s.push_str(&format!("### {name}\n\n| train \\ eval |"));
            for d in &self.datasets {
                s.push_str(&format!(" {d} |"));
            }
            s.push_str("\n|---|");
            s.push_str(&"---|".repeat(self.datasets.len()));
            s.push('\n');
            for (i, row) in m.iter().enumerate() {
                s.push_str(&format!("| {} |", self.datasets[i]));
                for (j, v) in row.iter().enumerate() {
                    match &dev {
                        Some(d) => s.push_str(&format!(" {:.2} ({:+.2}) |", 100.0 * v, 100.0 * d[i][j])),
                        None => s.push_str(&format!(" {:.2} |", 100.0 * v)),
                    }
                }
                s.push('\n');
            }
            s.push('\n');
        }
        s
    }
}

/// Deviation of each transfer cell from its reference: a diagonal cell
/// against the dataset's semi-inductive score, an off-diagonal cell against
/// the within-dataset cell of its evaluation dataset.
pub fn deviation_matrix(cells: &[Vec<f64>], semi_inductive: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = cells.len();
    if semi_inductive.len() != n || cells.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "deviation needs a square {n}×{n} grid and {n} references"
        )));
    }
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let reference = if i == j { semi_inductive[j] } else { cells[j][j] };
                    cells[i][j] - reference
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviation_by_hand() {
        let cells = vec![vec![0.90, 0.70], vec![0.60, 0.95]];
        let d = deviation_matrix(&cells, &[0.92, 0.97]).unwrap();
        let expect = [[-0.02, 0.70 - 0.95], [0.60 - 0.90, -0.02]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
        assert!(deviation_matrix(&cells, &[0.9]).is_err());
    }

    #[test]
    fn transfer_matrix_from_rows() {
        let mut rep = MetricsReport::new();
        for (m, d, ap) in [("A", "A", 0.9), ("A", "B", 0.7), ("B", "A", 0.6), ("B", "B", 0.8)] {
            rep.rows.push(MetricRow {
                model: format!("R-HGE@{m}"),
                dataset: d.into(),
                fold: 0,
                subsample: 0,
                relation: "cites".into(),
                ap,
                auc_roc: ap,
            });
        }
        let names = vec!["A".to_owned(), "B".to_owned()];
        let mut t = TransferMatrix::from_report(&rep, &names, "R-HGE@").unwrap();
        assert!(t.is_complete());
        assert_eq!(t.ap, vec![vec![0.9, 0.7], vec![0.6, 0.8]]);
        t.reference_ap = Some(vec![0.95, 0.85]);
        let md = t.markdown();
        assert!(md.contains("| A | 90.00 (-5.00) | 70.00 (-10.00) |"), "{md}");
        assert!(TransferMatrix::from_report(&rep, &["C".to_owned()], "R-HGE@").is_err());
    }
}
