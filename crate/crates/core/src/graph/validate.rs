use std::fmt;

use super::{FeatureTable, HeteroGraph};
use crate::error::Error;

/// One broken graph invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Schema(String),
    /// An edge endpoint is outside its node type's index range.
    DanglingEndpoint {
        relation: String,
        edge: usize,
        node_type: String,
        index: usize,
        count: usize,
    },
    /// Adjacency rows are unsorted or repeat a `(src, dst)` pair.
    DuplicateOrUnsorted { relation: String, count: usize },
    /// Offsets array does not match the source type's node count.
    AdjacencyShape { relation: String, detail: String },
    /// Feature table rows differ from the node count.
    FeatureRows {
        node_type: String,
        expected: usize,
        found: usize,
    },
    /// Per-node side tables (dates, meta) have the wrong length.
    AttributeRows { node_type: String, detail: String },
    /// A reverse relation is not the transpose of its forward relation.
    ReverseMismatch { relation: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Schema(s) => write!(f, "schema: {s}"),
            Violation::DanglingEndpoint {
                relation,
                edge,
                node_type,
                index,
                count,
            } => write!(
                f,
                "relation `{relation}` edge {edge}: {node_type} index {index} >= count {count}"
            ),
            Violation::DuplicateOrUnsorted { relation, count } => {
                write!(f, "relation `{relation}`: {count} duplicate or unsorted entries")
            }
            Violation::AdjacencyShape { relation, detail } => {
                write!(f, "relation `{relation}`: {detail}")
            }
            Violation::FeatureRows {
                node_type,
                expected,
                found,
            } => write!(
                f,
                "node type `{node_type}`: feature table has {found} rows, expected {expected}"
            ),
            Violation::AttributeRows { node_type, detail } => {
                write!(f, "node type `{node_type}`: {detail}")
            }
            Violation::ReverseMismatch { relation } => {
                write!(f, "relation `{relation}` is not the transpose of its forward relation")
            }
        }
    }
}

impl Violation {
    pub(crate) fn into_error(self, _g: &HeteroGraph) -> Error {
        match self {
            Violation::DanglingEndpoint {
                relation,
                edge,
                node_type,
                index,
                count,
            } => Error::DanglingEndpoint {
                relation,
                edge,
                node_type,
                index,
                count,
            },
            Violation::DuplicateOrUnsorted { relation, count } => {
                Error::DuplicateEdges { relation, count }
            }
            Violation::FeatureRows { .. } | Violation::AttributeRows { .. } => {
                Error::Dimension(self.to_string())
            }
            other => Error::Schema(other.to_string()),
        }
    }
}

/// Result of [`validate_graph`]; empty iff the graph is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "graph is valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation of `g`. Never fails.
pub fn validate_graph(g: &HeteroGraph) -> ValidationReport {
    let mut out = Vec::new();
    let schema = g.schema();
    let tables = g.node_tables();
    let adj = g.adjacencies();

    if tables.len() != schema.node_types.len() {
        out.push(Violation::Schema(format!(
            "{} node types declared, {} node tables present",
            schema.node_types.len(),
            tables.len()
        )));
    }
    if adj.len() != schema.relations.len() {
        out.push(Violation::Schema(format!(
            "{} relations declared, {} edge sets present",
            schema.relations.len(),
            adj.len()
        )));
    }
    for (i, t) in schema.node_types.iter().enumerate() {
        if t.name.is_empty() {
            out.push(Violation::Schema(format!("node type #{i} has an empty name")));
        }
        if schema.node_types[..i].iter().any(|o| o.name == t.name) {
            out.push(Violation::Schema(format!("node type `{}` declared twice", t.name)));
        }
    }

    for (t, table) in tables.iter().enumerate() {
        let name = schema
            .node_types
            .get(t)
            .map_or_else(|| format!("#{t}"), |n| n.name.clone());
        let n = table.ids.len();
        if table.dates.len() != n || table.meta.len() != n {
            out.push(Violation::AttributeRows {
                node_type: name.clone(),
                detail: format!(
                    "{n} ids but {} dates and {} meta maps",
                    table.dates.len(),
                    table.meta.len()
                ),
            });
        }
        if let FeatureTable::Dense(m) = &table.features {
            if m.nrows() != n {
                out.push(Violation::FeatureRows {
                    node_type: name,
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
    }

    let count = |t: usize| tables.get(t).map_or(0, |x| x.len());
    for (r, rel) in schema.relations.iter().enumerate() {
        if rel.src.0 >= tables.len() || rel.dst.0 >= tables.len() {
            out.push(Violation::Schema(format!(
                "relation `{}` references an undeclared node type",
                rel.name
            )));
            continue;
        }
        if schema.relations[..r].iter().any(|o| o.name == rel.name) {
            out.push(Violation::Schema(format!("relation `{}` declared twice", rel.name)));
        }
        if rel.is_target && rel.is_meta {
            out.push(Violation::Schema(format!(
                "relation `{}` is both target and meta",
                rel.name
            )));
        }
        let Some(a) = adj.get(r) else { continue };
        let (ns, nd) = (count(rel.src.0), count(rel.dst.0));
        let offs = a.offsets();
        if offs.len() != ns + 1
            || offs.first() != Some(&0)
            || offs.last() != Some(&a.num_edges())
            || offs.windows(2).any(|w| w[0] > w[1])
        {
            out.push(Violation::AdjacencyShape {
                relation: rel.name.clone(),
                detail: format!(
                    "offsets of length {} are inconsistent with {ns} source nodes and {} edges",
                    offs.len(),
                    a.num_edges()
                ),
            });
            continue;
        }
        let mut bad_order = 0;
        for (e, &v) in a.targets().iter().enumerate() {
            if v as usize >= nd {
                out.push(Violation::DanglingEndpoint {
                    relation: rel.name.clone(),
                    edge: e,
                    node_type: schema.node_types[rel.dst.0].name.clone(),
                    index: v as usize,
                    count: nd,
                });
            }
        }
        for u in 0..ns {
            bad_order += a.neighbors(u).windows(2).filter(|w| w[0] >= w[1]).count();
        }
        if bad_order > 0 {
            out.push(Violation::DuplicateOrUnsorted {
                relation: rel.name.clone(),
                count: bad_order,
            });
        }
        if rel.is_reverse {
            match rel.reverse_of.and_then(|f| schema.relations.get(f.0).map(|x| (f, x))) {
                Some((f, fwd)) if fwd.src == rel.dst && fwd.dst == rel.src => {
                    if let Some(fa) = adj.get(f.0) {
                        if fa.offsets().len() == nd + 1 && fa.transpose(ns) != **a {
                            out.push(Violation::ReverseMismatch {
                                relation: rel.name.clone(),
                            });
                        }
                    }
                }
                _ => out.push(Violation::Schema(format!(
                    "reverse relation `{}` does not swap a declared forward relation",
                    rel.name
                ))),
            }
        }
    }
    ValidationReport { violations: out }
}
