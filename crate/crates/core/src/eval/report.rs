use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::mean_std;
use crate::error::{Error, Result};

/// Metrics of one relation in one fold × subsample cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub dataset: String,
    pub fold: usize,
    pub subsample: usize,
    pub relation: String,
    pub ap: f64,
    pub auc_roc: f64,
}

/// Macro-averaged metrics of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub fold: usize,
    pub subsample: usize,
    pub ap: f64,
    pub auc_roc: f64,
}

/// Mean and sample standard deviation over the cells of one
/// (model, dataset) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub model: String,
    pub dataset: String,
    pub cells: usize,
    pub ap: (f64, f64),
    pub auc_roc: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
}

/// Unweighted mean, shifted by the first value so that identical inputs
/// average to exactly that value.
pub fn macro_average(values: &[f64]) -> Result<f64> {
    let Some(&first) = values.first() else {
        return Err(Error::Metric("nothing to average".into()));
    };
    Ok(first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64)
}

impl MetricsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
    }

    /// (model, dataset) pairs in first-appearance order.
    pub fn groups(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|(m, d)| m == &r.model && d == &r.dataset) {
                out.push((r.model.clone(), r.dataset.clone()));
            }
        }
        out
    }

    /// Per-cell macro averages over relations, ordered by fold then subsample.
    pub fn cells(&self, model: &str, dataset: &str) -> Result<Vec<CellMetrics>> {
        let mut by_cell: BTreeMap<(usize, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for r in self.rows.iter().filter(|r| r.model == model && r.dataset == dataset) {
            let e = by_cell.entry((r.fold, r.subsample)).or_default();
            e.0.push(r.ap);
            e.1.push(r.auc_roc);
        }
        by_cell
            .into_iter()
            .map(|((fold, subsample), (ap, auc))| {
                Ok(CellMetrics {
                    fold,
                    subsample,
                    ap: macro_average(&ap)?,
                    auc_roc: macro_average(&auc)?,
                })
            })
            .collect()
    }

    pub fn summary(&self, model: &str, dataset: &str) -> Result<Summary> {
        let cells = self.cells(model, dataset)?;
        if cells.is_empty() {
            return Err(Error::Metric(format!("no rows for {model} on {dataset}")));
        }
        let ap: Vec<f64> = cells.iter().map(|c| c.ap).collect();
        let auc: Vec<f64> = cells.iter().map(|c| c.auc_roc).collect();
        Ok(Summary {
            model: model.to_owned(),
            dataset: dataset.to_owned(),
            cells: cells.len(),
            ap: mean_std(&ap),
            auc_roc: mean_std(&auc),
        })
    }

    pub fn summaries(&self) -> Result<Vec<Summary>> {
        self.groups()
            .iter()
            .map(|(m, d)| self.summary(m, d))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let rows = rd.deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(Self { rows })
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Markdown table with one row per model and an AP and AUC-ROC column
    /// per dataset, as `mean ± σ` in percent.
    pub fn markdown(&self) -> Result<String> {
        let mut models: Vec<String> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        for (m, d) in self.groups() {
            if !models.contains(&m) {
                models.push(m);
            }
            if !datasets.contains(&d) {
                datasets.push(d);
            }
        }
        let mut s = String::from("| Model |");
        for d in &datasets {
            let _ = write!(s, " {d} AP | {d} AUC-ROC |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|---|".repeat(datasets.len()));
        s.push('\n');
        for m in &models {
            let _ = write!(s, "| {m} |");
            for d in &datasets {
                if self.rows.iter().any(|r| &r.model == m && &r.dataset == d) {
                    let sm = self.summary(m, d)?;
                    let _ = write!(s, " {} | {} |", percent(sm.ap), percent(sm.auc_roc));
                } else {
                    s.push_str(" - | - |");
                }
            }
            s.push('\n');
        }
        Ok(s)
    }
}

fn percent((mean, std): (f64, f64)) -> String {
    format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * std)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, fold: usize, sub: usize, rel: &str, ap: f64, auc: f64) -> MetricRow {
        MetricRow {
            model: model.into(),
            dataset: "d".into(),
            fold,
            subsample: sub,
            relation: rel.into(),
            ap,
            auc_roc: auc,
        }
    }

    #[test]
    fn macro_of_two_relations() {
        let rep = MetricsReport {
            rows: vec![row("m", 0, 0, "a", 0.8, 0.7), row("m", 0, 0, "b", 1.0, 0.9)],
        };
        let c = rep.cells("m", "d").unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].ap - 0.9).abs() < 1e-15);
        assert!((c[0].auc_roc - 0.8).abs() < 1e-15);
    }

    #[test]
    fn single_relation_macro_is_identity() {
        let rep = MetricsReport {
            rows: vec![row("m", 0, 0, "a", 0.37, 0.61)],
        };
        let s = rep.summary("m", "d").unwrap();
        assert_eq!(s.ap, (0.37, 0.0));
        assert_eq!(s.auc_roc, (0.61, 0.0));
    }

    #[test]
    fn identical_values_average_to_themselves() {
        assert_eq!(macro_average(&[0.25; 7]).unwrap(), 0.25);
        assert!(macro_average(&[]).is_err());
    }

    #[test]
    fn std_over_cells() {
        let rep = MetricsReport {
            rows: vec![
                row("m", 0, 0, "a", 0.5, 0.5),
                row("m", 0, 1, "a", 0.7, 0.5),
                row("m", 1, 0, "a", 0.9, 0.5),
            ],
        };
        let s = rep.summary("m", "d").unwrap();
        assert!((s.ap.0 - 0.7).abs() < 1e-15);
        assert!((s.ap.1 - 0.2).abs() < 1e-12);
        assert_eq!(s.auc_roc.1, 0.0);
        assert_eq!(s.cells, 3);
    }

    #[test]
    fn csv_round_trip_and_markdown() {
        let rep = MetricsReport {
            rows: vec![row("R-HGE", 0, 0, "cites", 0.91, 0.95), row("GCN", 0, 0, "cites", 0.6, 0.65)],
        };
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,dataset,fold,subsample,relation,ap,auc_roc\n"));
        assert_eq!(MetricsReport::read_csv(&buf[..]).unwrap(), rep);
        let md = rep.markdown().unwrap();
        assert!(md.contains("| R-HGE | 91.00 ± 0.00 | 95.00 ± 0.00 |"), "{md}");
        assert!(md.contains("| GCN |"));
    }
}
