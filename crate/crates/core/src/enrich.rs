//! Meta-feature enrichment.
//!
//! Categorical node attributes become topology: every attribute gets its own
//! meta node type with one node per observed value (plus a reserved
//! `<unknown>` node), and a meta relation linking each node to the node of
//! its value, together with the reverse relation. Meta relations are never
//! targets and are exempt from edge dropout.
//!
//! Case dates are bucketed by calendar year before building a vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    Adjacency, FeatureTable, HeteroGraph, NodeTable, NodeType, NodeTypeId, RelationId,
    RelationType,
};

/// Attribute name that reads the node date instead of the meta map.
pub const DATE_ATTRIBUTE: &str = "date";

/// Meta-node id reserved for values missing from the vocabulary.
pub const UNKNOWN_VALUE: &str = "<unknown>";

/// Categorical attributes listed for the legal citation graphs, by node type.
/// Free text (court name, slug, description) is left out.
pub const KNOWN_ATTRIBUTES: &[(&str, &str)] = &[
    ("case", "type"),
    ("case", DATE_ATTRIBUTE),
    ("law", "law_book_code"),
    ("law", "law_book_title"),
    ("law", "section"),
    ("court", "type"),
    ("court", "city"),
    ("court", "state"),
    ("court", "jurisdiction"),
    ("court", "level_of_appeal"),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichmentEntry {
    pub node_type: String,
    pub attribute: String,
    /// Name of the injected meta node type.
    pub meta_type: String,
    /// Name of the injected forward relation (`node_type -> meta_type`).
    pub relation: String,
    /// Value -> meta node index. Indices are `0..len`; the unknown node is
    /// `len`.
    pub vocabulary: BTreeMap<String, usize>,
}

impl EnrichmentEntry {
    pub fn unknown_index(&self) -> usize {
        self.vocabulary.len()
    }

    fn lookup(&self, value: &str) -> usize {
        self.vocabulary
            .get(value)
            .copied()
            .unwrap_or_else(|| self.unknown_index())
    }
}

/// Which attributes to inject and their value vocabularies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichmentPlan {
    pub entries: Vec<EnrichmentEntry>,
    /// Date bucket width in calendar years.
    pub date_bucket_years: u32,
}

impl Default for EnrichmentPlan {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            date_bucket_years: 1,
        }
    }
}

impl EnrichmentPlan {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

/// Calendar year of a day count relative to 1970-01-01.
pub fn year_of_days(days: i32) -> i32 {
    (epoch() + Duration::days(days.into())).year()
}

/// Day count of January 1st of `year`.
pub fn days_of_year_start(year: i32) -> i32 {
    let d = NaiveDate::from_ymd_opt(year, 1, 1).expect("year in range");
    (d - epoch()).num_days() as i32
}

fn date_bucket(days: i32, width: u32) -> String {
    let year = year_of_days(days);
    let w = width.max(1) as i32;
    year.div_euclid(w).checked_mul(w).unwrap_or(year).to_string()
}

/// Values of `attribute` on every node of type `t`, `None` where undefined.
fn attribute_values(
    g: &HeteroGraph,
    t: NodeTypeId,
    attribute: &str,
    bucket: u32,
) -> Vec<Option<String>> {
    let table = g.nodes(t);
    if attribute == DATE_ATTRIBUTE {
        table
            .dates
            .iter()
            .map(|d| d.map(|d| date_bucket(d, bucket)))
            .collect()
    } else {
        table.meta.iter().map(|m| m.get(attribute).cloned()).collect()
    }
}

fn available_attributes(g: &HeteroGraph, t: NodeTypeId) -> BTreeSet<String> {
    let table = g.nodes(t);
    let mut keys: BTreeSet<String> = table.meta.iter().flat_map(|m| m.keys().cloned()).collect();
    if table.dates.iter().any(Option::is_some) {
        keys.insert(DATE_ATTRIBUTE.to_owned());
    }
    keys
}

/// The subset of [`KNOWN_ATTRIBUTES`] present on `g`.
pub fn default_attributes(g: &HeteroGraph) -> Vec<(String, String)> {
    KNOWN_ATTRIBUTES
        .iter()
        .filter(|(t, a)| {
            g.node_type_id(t)
                .is_some_and(|tid| available_attributes(g, tid).contains(*a))
        })
        .map(|(t, a)| ((*t).to_owned(), (*a).to_owned()))
        .collect()
}

/// Builds vocabularies for the requested `(node type, attribute)` pairs.
pub fn plan_enrichment(
    g: &HeteroGraph,
    attributes: &[(String, String)],
    date_bucket_years: u32,
) -> Result<EnrichmentPlan> {
    if date_bucket_years == 0 {
        return Err(Error::InvalidArgument("date bucket width must be >= 1 year".into()));
    }
    let mut entries = Vec::with_capacity(attributes.len());
    for (type_name, attribute) in attributes {
        let t = g.require_node_type(type_name)?;
        let available = available_attributes(g, t);
        if !available.contains(attribute) {
            return Err(Error::UnknownAttribute {
                node_type: type_name.clone(),
                attribute: attribute.clone(),
                available: available.into_iter().collect::<Vec<_>>().join(", "),
            });
        }
        let distinct: BTreeSet<String> = attribute_values(g, t, attribute, date_bucket_years)
            .into_iter()
            .flatten()
            .collect();
        let vocabulary = distinct.into_iter().enumerate().map(|(i, v)| (v, i)).collect();
        let meta_type = format!("{type_name}.{attribute}");
        let relation = format!("{type_name}-has-{attribute}");
        if g.node_type_id(&meta_type).is_some() || g.relation_id(&relation).is_some() {
            return Err(Error::Schema(format!(
                "enrichment names `{meta_type}`/`{relation}` collide with the graph schema"
            )));
        }
        entries.push(EnrichmentEntry {
            node_type: type_name.clone(),
            attribute: attribute.clone(),
            meta_type,
            relation,
            vocabulary,
        });
    }
    Ok(EnrichmentPlan {
        entries,
        date_bucket_years,
    })
}

/// Appends meta nodes and meta relations (with reverses) described by
/// `plan`. Values outside a vocabulary link to that attribute's `<unknown>`
/// node. Existing nodes and edges are untouched.
pub fn enrich(g: &HeteroGraph, plan: &EnrichmentPlan) -> Result<HeteroGraph> {
    if plan.is_empty() {
        return Ok(g.clone());
    }
    let base_types = g.num_node_types();
    let base_relations = g.schema().relations.len();
    let mut new_types = Vec::with_capacity(plan.entries.len());
    let mut new_relations = Vec::with_capacity(2 * plan.entries.len());
    for (k, entry) in plan.entries.iter().enumerate() {
        let t = g.require_node_type(&entry.node_type)?;
        let meta_t = NodeTypeId(base_types + k);
        let n_meta = entry.vocabulary.len() + 1;

        let mut ids = vec![String::new(); n_meta];
        for (value, &i) in &entry.vocabulary {
            ids[i] = value.clone();
        }
        ids[entry.unknown_index()] = UNKNOWN_VALUE.to_owned();
        let table = NodeTable {
            dates: vec![None; n_meta],
            meta: vec![Default::default(); n_meta],
            ids,
            features: FeatureTable::Learnable,
        };
        new_types.push((
            NodeType {
                name: entry.meta_type.clone(),
                is_meta: true,
            },
            table,
        ));

        let pairs: Vec<(u32, u32)> =
            attribute_values(g, t, &entry.attribute, plan.date_bucket_years)
                .into_iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i as u32, entry.lookup(&v) as u32)))
                .collect();
        let forward = Adjacency::from_sorted_unique(g.node_count(t), pairs);
        let reverse = forward.transpose(n_meta);
        let fwd_id = RelationId(base_relations + 2 * k);
        new_relations.push((
            RelationType {
                name: entry.relation.clone(),
                src: t,
                dst: meta_t,
                is_target: false,
                is_reverse: false,
                is_meta: true,
                reverse_of: None,
            },
            forward,
        ));
        new_relations.push((
            RelationType {
                name: format!("rev-{}", entry.relation),
                src: meta_t,
                dst: t,
                is_target: false,
                is_reverse: true,
                is_meta: true,
                reverse_of: Some(fwd_id),
            },
            reverse,
        ));
    }
    g.extended(new_types, new_relations)
}

/// Removes every meta relation and meta node type.
pub fn strip_enrichment(g: &HeteroGraph) -> HeteroGraph {
    let schema = g.schema();
    let types: Vec<NodeTypeId> = schema
        .node_type_ids()
        .filter(|&t| schema.node_type(t).is_meta)
        .collect();
    let relations: Vec<RelationId> = schema
        .relation_ids()
        .filter(|&r| {
            let rel = schema.relation(r);
            rel.is_meta || types.contains(&rel.src) || types.contains(&rel.dst)
        })
        .collect();
    if types.is_empty() && relations.is_empty() {
        return g.clone();
    }
    g.without(&types, &relations)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::graph::{GraphBuilder, NodeRecord};

    fn courts() -> HeteroGraph {
        let mut b = GraphBuilder::new();
        let court = b.add_node_type("court").unwrap();
        for (i, city) in ["A", "B", "A"].iter().enumerate() {
            b.add_node(court, NodeRecord::new(format!("k{i}")).with_meta("city", *city));
        }
        b.build().unwrap()
    }

    fn attrs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn year_conversion_round_trips() {
        assert_eq!(year_of_days(0), 1970);
        assert_eq!(year_of_days(-1), 1969);
        assert_eq!(days_of_year_start(1970), 0);
        assert_eq!(days_of_year_start(2000), 10_957);
        for y in [1820, 1899, 1900, 1990, 2000, 2024, 2100] {
            let d = days_of_year_start(y);
            assert_eq!(year_of_days(d), y);
            assert_eq!(year_of_days(d - 1), y - 1);
            assert_eq!(year_of_days(d + 364), y);
        }
    }

    #[test]
    fn city_vocabulary_has_two_values() {
        let g = courts();
        let plan = plan_enrichment(&g, &attrs(&[("court", "city")]), 1).unwrap();
        assert_eq!(plan.entries[0].vocabulary.len(), 2);
        let e = enrich(&g, &plan).unwrap();
        let rel = e.require_relation("court-has-city").unwrap();
        assert_eq!(e.num_edges(rel), 3);
        let meta = e.require_node_type("court.city").unwrap();
        // two observed values plus the reserved unknown node
        assert_eq!(e.node_count(meta), 3);
        assert!(e.relation(rel).is_meta);
        assert!(e.schema().node_type(meta).is_meta);
        assert!(e.features(meta).is_learnable());
    }

    #[test]
    fn dates_are_bucketed_by_year() {
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        for (i, y) in [1990, 1990, 1991].iter().enumerate() {
            let d = days_of_year_start(*y) + 40 * i as i32;
            b.add_node(case, NodeRecord::new(format!("c{i}")).with_date(d));
        }
        let g = b.build().unwrap();
        let plan = plan_enrichment(&g, &attrs(&[("case", "date")]), 1).unwrap();
        assert_eq!(plan.entries[0].vocabulary.len(), 2);
        let decade = plan_enrichment(&g, &attrs(&[("case", "date")]), 10).unwrap();
        assert_eq!(decade.entries[0].vocabulary.keys().collect::<Vec<_>>(), vec!["1990"]);
    }

    #[test]
    fn unknown_attribute_lists_available() {
        let g = courts();
        match plan_enrichment(&g, &attrs(&[("court", "state")]), 1) {
            Err(Error::UnknownAttribute { available, .. }) => assert_eq!(available, "city"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_plan_is_identity() {
        let g = courts();
        assert_eq!(enrich(&g, &EnrichmentPlan::default()).unwrap(), g);
    }

    #[test]
    fn unseen_value_routes_to_unknown_node() {
        let g = courts();
        let plan = plan_enrichment(&g, &attrs(&[("court", "city")]), 1).unwrap();
        let mut b = GraphBuilder::new();
        let court = b.add_node_type("court").unwrap();
        b.add_node(court, NodeRecord::new("z").with_meta("city", "Zürich"));
        let other = enrich(&b.build().unwrap(), &plan).unwrap();
        let rel = other.require_relation("court-has-city").unwrap();
        assert_eq!(other.neighbors(rel, 0), &[2]);
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = plan_enrichment(&courts(), &attrs(&[("court", "city")]), 1).unwrap();
        assert_eq!(EnrichmentPlan::from_json(&plan.to_json().unwrap()).unwrap(), plan);
    }

    fn random_graph(seed: u64, n_cases: usize) -> HeteroGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = GraphBuilder::new();
        let case = b.add_node_type("case").unwrap();
        let court = b.add_node_type("court").unwrap();
        let cc = b.add_relation("cites", case, case, true).unwrap();
        let by = b.add_relation("decided-by", case, court, false).unwrap();
        for i in 0..n_cases {
            let mut rec = NodeRecord::new(format!("c{i}"))
                .with_date(days_of_year_start(1950 + rng.random_range(0..60)));
            if rng.random_bool(0.7) {
                rec = rec.with_meta("type", ["judgment", "order", "ruling"][rng.random_range(0..3)]);
            }
            b.add_node(case, rec);
        }
        for i in 0..8 {
            b.add_node(
                court,
                NodeRecord::new(format!("k{i}")).with_meta("city", format!("city{}", i % 3)),
            );
        }
        for i in 1..n_cases {
            b.add_edge(cc, i, rng.random_range(0..i));
            b.add_edge(by, i, rng.random_range(0..8));
        }
        b.build().unwrap()
    }

    #[test]
    fn edge_count_matches_brute_force_pair_count() {
        let g = random_graph(5, 200);
        let list = attrs(&[("case", "type"), ("case", "date"), ("court", "city")]);
        let plan = plan_enrichment(&g, &list, 1).unwrap();
        let e = enrich(&g, &plan).unwrap();
        // count defined (node, attribute) pairs directly from the records
        let mut defined = 0;
        for (t, a) in &list {
            let tid = g.require_node_type(t).unwrap();
            let table = g.nodes(tid);
            for i in 0..table.len() {
                let has = if a == "date" {
                    table.dates[i].is_some()
                } else {
                    table.meta[i].contains_key(a)
                };
                defined += usize::from(has);
            }
        }
        assert_eq!(e.total_edges(), g.total_edges() + 2 * defined);
        // target relation untouched
        let cc = g.require_relation("cites").unwrap();
        assert_eq!(e.adjacency(cc), g.adjacency(cc));
    }

    #[test]
    fn strip_inverts_enrich() {
        for seed in 0..5 {
            let g = random_graph(seed, 200);
            let plan = plan_enrichment(&g, &default_attributes(&g), 1).unwrap();
            assert!(!plan.is_empty());
            let e = enrich(&g, &plan).unwrap();
            let s = strip_enrichment(&e);
            assert_eq!(s.total_nodes(), g.total_nodes());
            assert_eq!(s.total_edges(), g.total_edges());
            assert_eq!(s, g);
        }
    }

    #[test]
    fn strip_on_plain_graph_is_identity() {
        let g = random_graph(9, 50);
        assert_eq!(strip_enrichment(&g), g);
    }

    #[test]
    fn default_attributes_filters_to_present() {
        let g = random_graph(1, 30);
        assert_eq!(
            default_attributes(&g),
            attrs(&[("case", "type"), ("case", "date"), ("court", "city")])
        );
    }
}
