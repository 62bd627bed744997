//! Seeded generator of desk-scale legal citation graphs.
//!
//! Cases arrive in date order. Each new case cites earlier cases and refers
//! to laws, choosing targets with weight `(in-degree + 1)^α`, boosted for
//! targets sharing the case's latent topic. Features are noisy unit-norm
//! topic directions, so both content and topology carry signal.

use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::seq::index::{sample, sample_weighted};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::enrich::{days_of_year_start, enrich, plan_enrichment};
use crate::error::{Error, Result};
use crate::graph::{add_all_reverse_relations, GraphBuilder, HeteroGraph, NodeRecord};

pub const CASE: &str = "case";
pub const LAW: &str = "law";
pub const COURT: &str = "court";
pub const CITES: &str = "cites";
pub const REFERS_TO: &str = "refers-to";
pub const DECIDED_BY: &str = "decided-by";
pub const LAW_CITES: &str = "law-cites";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub name: String,
    pub cases: usize,
    pub laws: usize,
    pub courts: usize,
    pub case_case_edges: usize,
    pub case_law_edges: usize,
    /// Law-to-law citations; the relation is only declared when nonzero.
    pub law_law_edges: usize,
    /// Exponent α of the attachment weight; 0 gives uniform attachment.
    pub attachment_exponent: f64,
    pub topics: usize,
    /// Weight multiplier for a target on the same topic.
    pub topic_affinity: f64,
    pub feature_dim: usize,
    /// Standard deviation of the Gaussian added to a topic direction before
    /// normalizing.
    pub feature_noise: f64,
    pub start_year: i32,
    pub years: u32,
    pub case_types: Vec<String>,
    pub law_books_per_topic: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Preset::LioLike.spec(0)
    }
}

/// The two shapes of legal citation graph the generator imitates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Law references outnumber case citations ten to one; no law-law edges.
    OldLike,
    /// Balanced case and law citations plus law-law citations.
    LioLike,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::OldLike, Preset::LioLike];

    pub fn name(self) -> &'static str {
        match self {
            Preset::OldLike => "old-like",
            Preset::LioLike => "lio-like",
        }
    }

    /// 500 cases, 50 laws and 5 courts.
    pub fn spec(self, seed: u64) -> SyntheticSpec {
        let base = SyntheticSpec {
            name: self.name().to_owned(),
            cases: 500,
            laws: 50,
            courts: 5,
            case_case_edges: 1500,
            case_law_edges: 1500,
            law_law_edges: 150,
            attachment_exponent: 1.0,
            topics: 10,
            topic_affinity: 30.0,
            feature_dim: 32,
            feature_noise: 0.15,
            start_year: 2000,
            years: 10,
            case_types: ["judgment", "order", "decision"].map(String::from).to_vec(),
            law_books_per_topic: 2,
            seed,
        };
        match self {
            Preset::LioLike => base,
            Preset::OldLike => SyntheticSpec {
                case_case_edges: 200,
                case_law_edges: 2000,
                law_law_edges: 0,
                ..base
            },
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{s}` (old-like, lio-like)")))
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.cases == 0 || self.laws == 0 || self.courts == 0 || self.topics == 0 {
            return bad("node and topic counts must be positive".into());
        }
        if self.feature_dim == 0 || self.feature_dim % 2 != 0 {
            return bad(format!("feature dimension {} must be even and positive", self.feature_dim));
        }
        if self.years == 0 || self.case_types.is_empty() || self.law_books_per_topic == 0 {
            return bad("years, case types and law books must be nonempty".into());
        }
        if !(self.attachment_exponent >= 0.0 && self.topic_affinity > 0.0 && self.feature_noise >= 0.0) {
            return bad("attachment exponent, affinity and noise must be nonnegative".into());
        }
        let n = self.cases as u128;
        let checks = [
            (CITES, self.case_case_edges as u128, n * n.saturating_sub(1) / 2),
            (REFERS_TO, self.case_law_edges as u128, n * self.laws as u128),
            (LAW_CITES, self.law_law_edges as u128, (self.laws as u128) * (self.laws as u128 - 1)),
        ];
        for (rel, want, possible) in checks {
            if want > possible {
                return bad(format!("{want} `{rel}` edges requested but only {possible} pairs exist"));
            }
        }
        Ok(())
    }
}

/// Splits `total` over slots with capacities `caps`, as evenly as the
/// capacities allow, filling later slots with whatever earlier ones cannot
/// hold.
fn quotas(total: usize, caps: &[usize]) -> Vec<usize> {
    let mut left = total;
    let mut out = Vec::with_capacity(caps.len());
    for (i, &cap) in caps.iter().enumerate() {
        let slots = caps.len() - i;
        let q = left.div_ceil(slots).min(cap);
        out.push(q);
        left -= q;
    }
    debug_assert_eq!(left, 0);
    out
}

fn unit_vector(v: Array1<f64>) -> Array1<f64> {
    let n = v.dot(&v).sqrt();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    Array1::from_shape_fn(dim, |_| rng.sample::<f64, _>(StandardNormal))
}

/// Picks `k` distinct targets from `candidates` with the attachment weight.
fn attach(
    rng: &mut ChaCha8Rng,
    candidates: usize,
    k: usize,
    weight: impl Fn(usize) -> f64,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let picked = sample_weighted(rng, candidates, weight, k)
        .map_err(|e| Error::InvalidArgument(format!("attachment sampling failed: {e}")))?;
    let mut v = picked.into_vec();
    v.sort_unstable();
    Ok(v)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<HeteroGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let alpha = spec.attachment_exponent;
    let affinity = |a: usize, b: usize| if a == b { spec.topic_affinity } else { 1.0 };

    let centers: Vec<Array1<f64>> = (0..spec.topics)
        .map(|_| unit_vector(gaussian(&mut rng, spec.feature_dim)))
        .collect();
    let features = |rng: &mut ChaCha8Rng, topic: usize| -> Vec<f32> {
        let v = &centers[topic] + &(gaussian(rng, spec.feature_dim) * spec.feature_noise);
        unit_vector(v).iter().map(|&x| x as f32).collect()
    };

    let mut b = GraphBuilder::new();
    let case = b.add_node_type(CASE)?;
    let law = b.add_node_type(LAW)?;
    let court = b.add_node_type(COURT)?;
    let cites = b.add_relation(CITES, case, case, true)?;
    let refers = b.add_relation(REFERS_TO, case, law, true)?;
    let decided = b.add_relation(DECIDED_BY, case, court, false)?;
    let law_cites = if spec.law_law_edges > 0 {
        Some(b.add_relation(LAW_CITES, law, law, false)?)
    } else {
        None
    };

    // increasing dates, distinct when the range allows
    let first = days_of_year_start(spec.start_year);
    let span = (days_of_year_start(spec.start_year + spec.years as i32) - first) as usize;
    let mut dates: Vec<i32> = if span >= spec.cases {
        sample(&mut rng, span, spec.cases).into_iter().map(|d| first + d as i32).collect()
    } else {
        (0..spec.cases).map(|_| first + rng.random_range(0..span) as i32).collect()
    };
    dates.sort_unstable();

    for k in 0..spec.courts {
        b.add_node(
            court,
            NodeRecord::new(format!("court-{k}"))
                .with_meta("type", if k == 0 { "federal" } else { "regional" })
                .with_meta("city", format!("city-{k}"))
                .with_meta("state", format!("state-{}", k % 3))
                .with_meta("jurisdiction", ["civil", "criminal", "administrative"][k % 3])
                .with_meta("level_of_appeal", if k == 0 { "final" } else { "first" }),
        );
    }
    let law_topic: Vec<usize> = (0..spec.laws).map(|_| rng.random_range(0..spec.topics)).collect();
    for (l, &t) in law_topic.iter().enumerate() {
        let book = t * spec.law_books_per_topic + rng.random_range(0..spec.law_books_per_topic);
        let f = features(&mut rng, t);
        b.add_node(
            law,
            NodeRecord::new(format!("law-{l}"))
                .with_meta("law_book_code", format!("B{book}"))
                .with_features(f),
        );
    }
    let case_topic: Vec<usize> = (0..spec.cases).map(|_| rng.random_range(0..spec.topics)).collect();

    let cc_quota = quotas(spec.case_case_edges, &(0..spec.cases).collect::<Vec<_>>());
    let cl_quota = quotas(spec.case_law_edges, &vec![spec.laws; spec.cases]);
    let mut case_in = vec![0usize; spec.cases];
    let mut law_in = vec![0usize; spec.laws];
    for i in 0..spec.cases {
        let t = case_topic[i];
        let f = features(&mut rng, t);
        let kind = &spec.case_types[rng.random_range(0..spec.case_types.len())];
        b.add_node(
            case,
            NodeRecord::new(format!("case-{i}"))
                .with_date(dates[i])
                .with_meta("type", kind.clone())
                .with_features(f),
        );
        let k = if rng.random::<f64>() < 0.5 {
            t % spec.courts
        } else {
            rng.random_range(0..spec.courts)
        };
        b.add_edge(decided, i, k);

        let cited = attach(&mut rng, i, cc_quota[i], |j| {
            ((case_in[j] + 1) as f64).powf(alpha) * affinity(t, case_topic[j])
        })?;
        for j in cited {
            b.add_edge(cites, i, j);
            case_in[j] += 1;
        }
        let laws = attach(&mut rng, spec.laws, cl_quota[i], |l| {
            ((law_in[l] + 1) as f64).powf(alpha) * affinity(t, law_topic[l])
        })?;
        for l in laws {
            b.add_edge(refers, i, l);
            law_in[l] += 1;
        }
    }

    if let Some(r) = law_cites {
        let caps = vec![spec.laws - 1; spec.laws];
        let quota = quotas(spec.law_law_edges, &caps);
        // sources in random order so the quota remainder is not biased
        let order = sample(&mut rng, spec.laws, spec.laws).into_vec();
        for (slot, &l) in order.iter().enumerate() {
            let t = law_topic[l];
            let picked = attach(&mut rng, spec.laws - 1, quota[slot], |m| {
                let m = if m >= l { m + 1 } else { m };
                ((law_in[m] + 1) as f64).powf(alpha) * affinity(t, law_topic[m])
            })?;
            for m in picked {
                let m = if m >= l { m + 1 } else { m };
                b.add_edge(r, l, m);
            }
        }
    }
    b.build()
}

/// Ten nodes: 5 cases, 2 laws and 3 meta nodes from enriching the case
/// `type` attribute. `cites` and `refers-to` are targets; every relation has
/// its reverse.
pub fn toy_graph() -> HeteroGraph {
    let build = || -> Result<HeteroGraph> {
        let mut b = GraphBuilder::new();
        let case = b.add_node_type(CASE)?;
        let law = b.add_node_type(LAW)?;
        let cc = b.add_relation(CITES, case, case, true)?;
        let cl = b.add_relation(REFERS_TO, case, law, true)?;
        for i in 0..5 {
            let f = vec![(i as f32 * 0.7).sin(), (i as f32 * 1.3).cos(), 0.1 * i as f32];
            b.add_node(
                case,
                NodeRecord::new(format!("c{i}"))
                    .with_features(f)
                    .with_meta("type", if i % 2 == 0 { "civil" } else { "criminal" }),
            );
        }
        for i in 0..2 {
            let f = vec![0.3 * i as f32, -0.5, (i as f32).cos()];
            b.add_node(law, NodeRecord::new(format!("l{i}")).with_features(f));
        }
        for (u, v) in [(1, 0), (2, 0), (3, 1), (4, 2), (4, 3)] {
            b.add_edge(cc, u, v);
        }
        for (u, v) in [(0, 0), (1, 0), (2, 1), (3, 1), (4, 0)] {
            b.add_edge(cl, u, v);
        }
        let g = b.build()?;
        let plan = plan_enrichment(&g, &[(CASE.into(), "type".into())], 10)?;
        add_all_reverse_relations(&enrich(&g, &plan)?)
    };
    build().expect("toy graph is well formed")
}

/// Feature matrix rows of one node type as f64, for tests and diagnostics.
pub fn feature_rows(g: &HeteroGraph, type_name: &str) -> Option<Array2<f64>> {
    let t = g.node_type_id(type_name)?;
    g.features(t).dense().map(|m| m.mapv(f64::from))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_counts_are_exact() {
        for p in Preset::ALL {
            let s = p.spec(3);
            let g = generate_synthetic(&s).unwrap();
            let count = |n: &str| g.node_count(g.node_type_id(n).unwrap());
            assert_eq!((count(CASE), count(LAW), count(COURT)), (500, 50, 5));
            let edges = |n: &str| g.relation_id(n).map_or(0, |r| g.num_edges(r));
            assert_eq!(edges(CITES), s.case_case_edges);
            assert_eq!(edges(REFERS_TO), s.case_law_edges);
            assert_eq!(edges(LAW_CITES), s.law_law_edges);
            assert_eq!(edges(DECIDED_BY), 500);
        }
    }

    #[test]
    fn citations_point_backwards_in_time() {
        let g = generate_synthetic(&Preset::LioLike.spec(9)).unwrap();
        let case = g.node_type_id(CASE).unwrap();
        let dates = &g.nodes(case).dates;
        assert!(dates.windows(2).all(|w| w[0] < w[1]));
        for (u, v) in g.adjacency(g.relation_id(CITES).unwrap()).iter() {
            assert!(dates[u as usize] > dates[v as usize]);
        }
    }

    #[test]
    fn features_are_unit_norm() {
        let g = generate_synthetic(&Preset::OldLike.spec(1)).unwrap();
        for name in [CASE, LAW] {
            let m = feature_rows(&g, name).unwrap();
            assert_eq!(m.ncols(), 32);
            for row in m.rows() {
                assert!((row.dot(&row).sqrt() - 1.0).abs() < 1e-5);
            }
        }
        assert!(feature_rows(&g, COURT).is_none());
    }

    #[test]
    fn deterministic_under_seed() {
        let s = Preset::LioLike.spec(5);
        assert_eq!(generate_synthetic(&s).unwrap(), generate_synthetic(&s).unwrap());
        assert_ne!(
            generate_synthetic(&s).unwrap(),
            generate_synthetic(&Preset::LioLike.spec(6)).unwrap()
        );
    }

    #[test]
    fn impossible_edge_counts_are_errors() {
        let s = SyntheticSpec {
            cases: 10,
            case_case_edges: 46,
            ..Preset::LioLike.spec(0)
        };
        assert!(generate_synthetic(&s).is_err());
        let s = SyntheticSpec {
            cases: 10,
            laws: 3,
            case_case_edges: 45,
            case_law_edges: 30,
            law_law_edges: 6,
            ..Preset::LioLike.spec(0)
        };
        let g = generate_synthetic(&s).unwrap();
        assert_eq!(g.num_edges(g.relation_id(CITES).unwrap()), 45);
        assert!(generate_synthetic(&SyntheticSpec { law_law_edges: 7, ..s.clone() }).is_err());
        assert!(generate_synthetic(&SyntheticSpec { feature_dim: 7, ..s }).is_err());
    }

    #[test]
    fn quotas_respect_capacity() {
        assert_eq!(quotas(10, &[0, 1, 2, 3, 4]), vec![0, 1, 2, 3, 4]);
        assert_eq!(quotas(6, &[5, 5, 5]), vec![2, 2, 2]);
        assert_eq!(quotas(7, &[5, 5, 5]), vec![3, 2, 2]);
    }

    #[test]
    fn preset_names_parse() {
        assert_eq!("old-like".parse::<Preset>().unwrap(), Preset::OldLike);
        assert_eq!("lio-like".parse::<Preset>().unwrap(), Preset::LioLike);
        assert!("old".parse::<Preset>().is_err());
    }
}
