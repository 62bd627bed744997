use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Adjacency, HeteroGraph, NodeTypeId, RelationId};
use crate::train::droppable_relations;

/// Date-based folds over the dated node type (cases).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub dated_type: String,
    /// Start date of each fold's test period, ascending.
    pub cutoffs: Vec<i32>,
    /// One past the latest date; the end of the last test period.
    pub end: i32,
}

/// Which nodes of the dated type surround the test period at test time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Induction {
    /// Earlier nodes and their edges stay; new nodes arrive with context edges.
    Semi,
    /// Only the test-period nodes (plus undated types) exist.
    Full,
}

/// Test-time graph of one fold and the hidden target edges to recover.
#[derive(Debug, Clone)]
pub struct TestView {
    pub graph: HeteroGraph,
    pub relations: Vec<TestRelation>,
}

#[derive(Debug, Clone)]
pub struct TestRelation {
    pub relation: RelationId,
    pub name: String,
    /// In `TestView::graph` indices.
    pub positives: Vec<(u32, u32)>,
    /// Every known edge of the relation among the view's nodes, hidden or
    /// not. Negatives avoid these.
    pub known: Adjacency,
}

impl TestView {
    pub fn num_test_edges(&self) -> usize {
        self.relations.iter().map(|r| r.positives.len()).sum()
    }
}

fn dates_of(g: &HeteroGraph, t: NodeTypeId) -> Result<Vec<i32>> {
    let table = g.nodes(t);
    table
        .dates
        .iter()
        .enumerate()
        .map(|(i, d)| {
            d.ok_or_else(|| {
                Error::Split(format!(
                    "{} `{}` has no date",
                    g.schema().node_type(t).name,
                    table.ids[i]
                ))
            })
        })
        .collect()
}

/// Cutoffs at the date quantiles `0.5 + 0.5 i / n_folds`, `i = 0..n_folds`.
pub fn temporal_folds(g: &HeteroGraph, dated_type: &str, n_folds: usize) -> Result<SplitPlan> {
    if n_folds == 0 {
        return Err(Error::InvalidArgument("at least one fold is required".into()));
    }
    let t = g.require_node_type(dated_type)?;
    let mut dates = dates_of(g, t)?;
    if dates.is_empty() {
        return Err(Error::Split(format!("no `{dated_type}` nodes to split")));
    }
    dates.sort_unstable();
    let n = dates.len();
    let cutoffs: Vec<i32> = (0..n_folds)
        .map(|i| {
            let q = 0.5 + 0.5 * i as f64 / n_folds as f64;
            dates[((q * n as f64).floor() as usize).min(n - 1)]
        })
        .collect();
    if cutoffs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Split(format!(
            "cutoffs {cutoffs:?} collide; too few distinct dates for {n_folds} folds"
        )));
    }
    let plan = SplitPlan {
        dated_type: dated_type.to_owned(),
        cutoffs,
        end: dates[n - 1] + 1,
    };
    for f in 0..n_folds {
        if plan.test_view(g, f, Induction::Semi)?.num_test_edges() == 0 {
            return Err(Error::Split(format!(
                "no test edges for the fold starting at cutoff day {}",
                plan.cutoffs[f]
            )));
        }
    }
    Ok(plan)
}

impl SplitPlan {
    pub fn n_folds(&self) -> usize {
        self.cutoffs.len()
    }

    /// Test period `[start, end)` of `fold`.
    pub fn period(&self, fold: usize) -> (i32, i32) {
        let start = self.cutoffs[fold];
        let end = self.cutoffs.get(fold + 1).copied().unwrap_or(self.end);
        (start, end)
    }

    fn check_fold(&self, fold: usize) -> Result<()> {
        if fold >= self.n_folds() {
            return Err(Error::InvalidArgument(format!(
                "fold {fold} of a {}-fold plan",
                self.n_folds()
            )));
        }
        Ok(())
    }

    fn keep_mask(
        &self,
        g: &HeteroGraph,
        keep_dated: impl Fn(i32) -> bool,
    ) -> Result<(NodeTypeId, Vec<Vec<bool>>)> {
        let t = g.require_node_type(&self.dated_type)?;
        let mut keep = Vec::with_capacity(g.num_node_types());
        for u in g.schema().node_type_ids() {
            if u == t {
                keep.push(dates_of(g, t)?.into_iter().map(&keep_dated).collect());
            } else {
                keep.push(vec![true; g.node_count(u)]);
            }
        }
        Ok((t, keep))
    }

    /// Graph induced by the dated nodes before the fold's cutoff and every
    /// undated node.
    pub fn train_graph(&self, g: &HeteroGraph, fold: usize) -> Result<HeteroGraph> {
        self.check_fold(fold)?;
        let (start, _) = self.period(fold);
        let (_, keep) = self.keep_mask(g, |d| d < start)?;
        Ok(g.induced_subgraph(&keep).0)
    }

    /// Test-time graph of `fold` with every target edge touching a
    /// test-period node removed and returned as a positive.
    pub fn test_view(&self, g: &HeteroGraph, fold: usize, mode: Induction) -> Result<TestView> {
        self.check_fold(fold)?;
        let (start, end) = self.period(fold);
        let (t, keep) = self.keep_mask(g, |d| match mode {
            Induction::Semi => d < end,
            Induction::Full => start <= d && d < end,
        })?;
        let (h, new_to_old) = g.induced_subgraph(&keep);
        let dates = dates_of(g, t)?;
        let in_period: Vec<bool> = new_to_old[t.0]
            .iter()
            .map(|&old| dates[old as usize] >= start)
            .collect();
        let touches = |ty: NodeTypeId, i: u32| ty == t && in_period[i as usize];

        let mut replaced = Vec::new();
        let mut relations = Vec::new();
        for r in droppable_relations(&h) {
            let rel = h.relation(r);
            let adj = h.adjacency(r);
            let hidden: Vec<bool> = adj
                .iter()
                .map(|(u, v)| touches(rel.src, u) || touches(rel.dst, v))
                .collect();
            let positives: Vec<(u32, u32)> = adj
                .iter()
                .zip(&hidden)
                .filter(|(_, &h)| h)
                .map(|(e, _)| e)
                .collect();
            let kept: Vec<bool> = hidden.iter().map(|h| !h).collect();
            replaced.push((r, adj.filter_mask(&kept)));
            if let Some(rr) = h.schema().reverse_of(r) {
                let rev_kept: Vec<bool> = h
                    .adjacency(rr)
                    .iter()
                    .map(|(v, u)| !(touches(rel.src, u) || touches(rel.dst, v)))
                    .collect();
                replaced.push((rr, h.adjacency(rr).filter_mask(&rev_kept)));
            }
            relations.push(TestRelation {
                relation: r,
                name: rel.name.clone(),
                positives,
                known: adj.clone(),
            });
        }
        Ok(TestView {
            graph: h.with_edge_sets(replaced),
            relations,
        })
    }
}

/// `n` uniform subsets of `⌊fraction · |edges|⌋` edges each, drawn without
/// replacement and kept in input order.
pub fn test_subsamples<T: Clone>(edges: &[T], fraction: f64, n: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample fraction {fraction} outside (0, 1]"
        )));
    }
    if edges.is_empty() {
        return Err(Error::Split("cannot subsample an empty test set".into()));
    }
    let size = (fraction * edges.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let mut idx = sample(&mut rng, edges.len(), size).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| edges[i].clone()).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use rand::Rng;

    use super::*;
    use crate::graph::{add_all_reverse_relations, GraphBuilder, NodeRecord};

    /// Cases dated 0..n in random order, each citing a few earlier cases and
    /// one law; every case is decided by one court.
    fn dated_graph(n: usize, seed: u64) -> HeteroGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        let law = b.add_node_type("law").unwrap();
        let court = b.add_node_type("court").unwrap();
        let cc = b.add_relation("cites", case, case, true).unwrap();
        let cl = b.add_relation("refers-to", case, law, true).unwrap();
        let dc = b.add_relation("decided-by", case, court, false).unwrap();
        let mut days: Vec<i32> = (0..n as i32).map(|d| d * 3).collect();
        for i in (1..n).rev() {
            days.swap(i, rng.random_range(0..=i));
        }
        for (i, &d) in days.iter().enumerate() {
            b.add_node(case, NodeRecord::new(format!("c{i}")).with_date(d));
        }
        for i in 0..5 {
            b.add_node(law, NodeRecord::new(format!("l{i}")));
        }
        b.add_node(court, NodeRecord::new("k"));
        let mut by_date: Vec<usize> = (0..n).collect();
        by_date.sort_by_key(|&i| days[i]);
        for (k, &i) in by_date.iter().enumerate() {
            let mut cited = BTreeSet::new();
            for _ in 0..3.min(k) {
                cited.insert(by_date[rng.random_range(0..k)]);
            }
            for j in cited {
                b.add_edge(cc, i, j);
            }
            b.add_edge(cl, i, rng.random_range(0..5));
            b.add_edge(dc, i, 0);
        }
        add_all_reverse_relations(&b.build().unwrap()).unwrap()
    }

    #[test]
    fn one_fold_tests_the_upper_half() {
        let g = dated_graph(60, 1);
        let plan = temporal_folds(&g, "case", 1).unwrap();
        let case = g.node_type_id("case").unwrap();
        let mut dates: Vec<i32> = g.nodes(case).dates.iter().map(|d| d.unwrap()).collect();
        dates.sort();
        assert_eq!(plan.cutoffs, vec![dates[30]]);
        let view = plan.test_view(&g, 0, Induction::Semi).unwrap();
        let vcase = view.graph.node_type_id("case").unwrap();
        let vdates = &view.graph.nodes(vcase).dates;
        for tr in &view.relations {
            let rel = view.graph.relation(tr.relation);
            for &(u, v) in &tr.positives {
                let src_new = rel.src == vcase && vdates[u as usize].unwrap() >= plan.cutoffs[0];
                let dst_new = rel.dst == vcase && vdates[v as usize].unwrap() >= plan.cutoffs[0];
                assert!(src_new || dst_new);
            }
        }
    }

    #[test]
    fn cutoffs_follow_quantiles() {
        let g = dated_graph(500, 2);
        let plan = temporal_folds(&g, "case", 5).unwrap();
        let case = g.node_type_id("case").unwrap();
        let dates: Vec<i32> = g.nodes(case).dates.iter().map(|d| d.unwrap()).collect();
        for (i, &c) in plan.cutoffs.iter().enumerate() {
            let below = dates.iter().filter(|&&d| d < c).count() as f64 / dates.len() as f64;
            let q = 0.5 + 0.1 * i as f64;
            assert!((below - q).abs() <= 0.02, "fold {i}: {below} vs {q}");
        }
    }

    fn edge_ids(g: &HeteroGraph) -> BTreeSet<(String, String, String)> {
        let mut out = BTreeSet::new();
        for r in g.schema().relation_ids() {
            let rel = g.relation(r);
            for (u, v) in g.adjacency(r).iter() {
                out.insert((
                    rel.name.clone(),
                    g.nodes(rel.src).ids[u as usize].clone(),
                    g.nodes(rel.dst).ids[v as usize].clone(),
                ));
            }
        }
        out
    }

    #[test]
    fn folds_are_cumulative_and_leak_free() {
        let g = dated_graph(200, 3);
        let plan = temporal_folds(&g, "case", 5).unwrap();
        let mut previous: Option<BTreeSet<_>> = None;
        for f in 0..5 {
            let train = edge_ids(&plan.train_graph(&g, f).unwrap());
            if let Some(p) = &previous {
                assert!(p.is_subset(&train));
            }
            for mode in [Induction::Semi, Induction::Full] {
                let view = plan.test_view(&g, f, mode).unwrap();
                let visible = edge_ids(&view.graph);
                for tr in &view.relations {
                    let rel = view.graph.relation(tr.relation);
                    for &(u, v) in &tr.positives {
                        let id = (
                            rel.name.clone(),
                            view.graph.nodes(rel.src).ids[u as usize].clone(),
                            view.graph.nodes(rel.dst).ids[v as usize].clone(),
                        );
                        assert!(!train.contains(&id));
                        assert!(!visible.contains(&id));
                        let rev = (format!("rev-{}", id.0), id.2.clone(), id.1.clone());
                        assert!(!visible.contains(&rev));
                    }
                }
            }
            previous = Some(train);
        }
    }

    #[test]
    fn context_edges_of_new_nodes_stay_visible() {
        let g = dated_graph(80, 4);
        let plan = temporal_folds(&g, "case", 2).unwrap();
        let view = plan.test_view(&g, 0, Induction::Semi).unwrap();
        let dc = view.graph.relation_id("decided-by").unwrap();
        let case = view.graph.node_type_id("case").unwrap();
        assert_eq!(view.graph.num_edges(dc), view.graph.node_count(case));
    }

    #[test]
    fn fully_inductive_view_has_only_period_cases() {
        let g = dated_graph(100, 5);
        let plan = temporal_folds(&g, "case", 5).unwrap();
        let (start, end) = plan.period(2);
        let view = plan.test_view(&g, 2, Induction::Full).unwrap();
        let case = view.graph.node_type_id("case").unwrap();
        assert!(view.graph.nodes(case).dates.iter().all(|d| {
            let d = d.unwrap();
            start <= d && d < end
        }));
        assert!(view.num_test_edges() > 0);
    }

    #[test]
    fn undated_case_is_an_error() {
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        b.add_relation("cites", case, case, true).unwrap();
        b.add_node(case, NodeRecord::new("a").with_date(1));
        b.add_node(case, NodeRecord::new("b"));
        let g = b.build().unwrap();
        assert!(matches!(temporal_folds(&g, "case", 1), Err(Error::Split(_))));
    }

    #[test]
    fn empty_test_fold_names_the_cutoff() {
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        b.add_relation("cites", case, case, true).unwrap();
        for i in 0..4 {
            b.add_node(case, NodeRecord::new(format!("{i}")).with_date(i));
        }
        let g = b.build().unwrap();
        let err = temporal_folds(&g, "case", 1).unwrap_err().to_string();
        assert!(err.contains("cutoff day 2"), "{err}");
    }

    #[test]
    fn subsample_sizes_and_determinism() {
        let edges: Vec<u32> = (0..100).collect();
        let subs = test_subsamples(&edges, 0.9, 5, 7).unwrap();
        assert_eq!(subs.len(), 5);
        assert!(subs.iter().all(|s| s.len() == 90));
        assert_ne!(subs[0], subs[1]);
        assert_eq!(subs, test_subsamples(&edges, 0.9, 5, 7).unwrap());
        let full = test_subsamples(&edges, 1.0, 3, 1).unwrap();
        assert!(full.iter().all(|s| s == &edges));
        assert!(test_subsamples::<u32>(&[], 0.9, 5, 0).is_err());
        assert!(test_subsamples(&edges, 0.0, 5, 0).is_err());
    }
}
