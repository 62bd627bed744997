use std::collections::HashMap;
use std::sync::Arc;

use ndarray::Array2;

use super::{Adjacency, FeatureTable, HeteroGraph, Meta, NodeTable, NodeTypeId, RelationId, Schema};
use crate::error::{Error, Result};

/// One node as handed to the builder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub date: Option<i32>,
    pub meta: Meta,
    pub features: Option<Vec<f32>>,
}

impl NodeRecord {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ..Default::default()
        }
    }

    pub fn with_date(mut self, days: i32) -> Self {
        self.date = Some(days);
        self
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_features(mut self, features: Vec<f32>) -> Self {
        self.features = Some(features);
        self
    }
}

/// Incremental, checked construction of a [`HeteroGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    schema: Schema,
    nodes: Vec<Vec<NodeRecord>>,
    edges: Vec<Vec<(usize, usize)>>,
    index: Vec<HashMap<String, usize>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_schema(schema: Schema) -> Self {
        let nt = schema.node_types.len();
        let nr = schema.relations.len();
        Self {
            schema,
            nodes: vec![Vec::new(); nt],
            edges: vec![Vec::new(); nr],
            index: vec![HashMap::new(); nt],
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn add_node_type(&mut self, name: &str) -> Result<NodeTypeId> {
        let id = self.schema.add_node_type(name)?;
        self.nodes.push(Vec::new());
        self.index.push(HashMap::new());
        Ok(id)
    }

    pub fn add_relation(
        &mut self,
        name: &str,
        src: NodeTypeId,
        dst: NodeTypeId,
        is_target: bool,
    ) -> Result<RelationId> {
        let id = self.schema.add_relation(name, src, dst, is_target)?;
        self.edges.push(Vec::new());
        Ok(id)
    }

    /// Appends a node and returns its dense index within its type.
    pub fn add_node(&mut self, t: NodeTypeId, record: NodeRecord) -> usize {
        let idx = self.nodes[t.0].len();
        self.index[t.0].insert(record.id.clone(), idx);
        self.nodes[t.0].push(record);
        idx
    }

    pub fn node_index(&self, t: NodeTypeId, id: &str) -> Option<usize> {
        self.index[t.0].get(id).copied()
    }

    pub fn add_edge(&mut self, r: RelationId, src: usize, dst: usize) {
        self.edges[r.0].push((src, dst));
    }

    /// Adds an edge between nodes given by external id.
    pub fn add_edge_by_id(&mut self, r: RelationId, src: &str, dst: &str) -> Result<()> {
        let rel = self.schema.relation(r);
        let lookup = |t: NodeTypeId, id: &str| {
            self.node_index(t, id).ok_or_else(|| {
                Error::Schema(format!(
                    "relation `{}` references unknown {} node `{id}`",
                    rel.name,
                    self.schema.node_type(t).name
                ))
            })
        };
        let (s, d) = (lookup(rel.src, src)?, lookup(rel.dst, dst)?);
        self.edges[r.0].push((s, d));
        Ok(())
    }

    pub fn build(self) -> Result<HeteroGraph> {
        build_graph(self.schema, self.nodes, self.edges)
    }
}

/// Validates typed node and edge records against `schema` and assembles an
/// immutable graph with sorted source-major adjacency.
pub fn build_graph(
    schema: Schema,
    nodes: Vec<Vec<NodeRecord>>,
    edges: Vec<Vec<(usize, usize)>>,
) -> Result<HeteroGraph> {
    if nodes.len() != schema.node_types.len() || edges.len() != schema.relations.len() {
        return Err(Error::Schema(format!(
            "schema declares {} node types and {} relations, got records for {} and {}",
            schema.node_types.len(),
            schema.relations.len(),
            nodes.len(),
            edges.len()
        )));
    }
    let counts: Vec<usize> = nodes.iter().map(Vec::len).collect();

    let mut adjacency = Vec::with_capacity(edges.len());
    for (r, list) in edges.into_iter().enumerate() {
        let rel = &schema.relations[r];
        let (ns, nd) = (counts[rel.src.0], counts[rel.dst.0]);
        for (e, &(u, v)) in list.iter().enumerate() {
            let (t, idx, count) = if u >= ns {
                (rel.src, u, ns)
            } else if v >= nd {
                (rel.dst, v, nd)
            } else {
                continue;
            };
            return Err(Error::DanglingEndpoint {
                relation: rel.name.clone(),
                edge: e,
                node_type: schema.node_types[t.0].name.clone(),
                index: idx,
                count,
            });
        }
        let pairs = list.into_iter().map(|(u, v)| (u as u32, v as u32)).collect();
        let (adj, dups) = Adjacency::from_pairs(ns, pairs);
        if dups > 0 {
            return Err(Error::DuplicateEdges {
                relation: rel.name.clone(),
                count: dups,
            });
        }
        adjacency.push(Arc::new(adj));
    }

    let mut tables = Vec::with_capacity(nodes.len());
    for (t, records) in nodes.into_iter().enumerate() {
        let name = &schema.node_types[t].name;
        let with = records.iter().filter(|r| r.features.is_some()).count();
        let features = if with == 0 {
            FeatureTable::Learnable
        } else if with < records.len() {
            return Err(Error::Dimension(format!(
                "node type `{name}`: {} of {} nodes lack features",
                records.len() - with,
                records.len()
            )));
        } else {
            let dim = records[0].features.as_ref().map_or(0, Vec::len);
            let mut data = Vec::with_capacity(dim * records.len());
            for r in &records {
                let f = r.features.as_ref().expect("checked above");
                if f.len() != dim {
                    return Err(Error::Dimension(format!(
                        "node type `{name}`: node `{}` has {} features, expected {dim}",
                        r.id,
                        f.len()
                    )));
                }
                if let Some(bad) = f.iter().find(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "node `{}` has feature value {bad}",
                        r.id
                    )));
                }
                data.extend_from_slice(f);
            }
            let m = Array2::from_shape_vec((records.len(), dim), data)
                .map_err(|e| Error::Dimension(e.to_string()))?;
            FeatureTable::Dense(Arc::new(m))
        };
        let mut table = NodeTable::empty();
        table.features = features;
        for r in records {
            table.ids.push(r.id);
            table.dates.push(r.date);
            table.meta.push(r.meta);
        }
        tables.push(Arc::new(table));
    }

    HeteroGraph::from_parts(schema, tables, adjacency)
}
