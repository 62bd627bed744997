//! Heterogeneous graph storage.
//!
//! Nodes are indexed densely per node type (`0..n`), external string IDs live
//! in a side table. Every relation stores its edges as a source-major
//! compressed adjacency so that a node's out-neighbors are an O(1) slice.
//! A [`HeteroGraph`] is immutable once built; derived graphs (reverse
//! augmentation, enrichment, edge dropout views, fold subgraphs) share the
//! untouched parts through `Arc`.

mod adjacency;
mod builder;
pub mod homo;
mod validate;

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adjacency::Adjacency;
pub use builder::{build_graph, GraphBuilder, NodeRecord};
pub use homo::{homogenize, HomoGraph};
pub use validate::{validate_graph, ValidationReport, Violation};

/// Categorical node attributes (`court.city`, `law.law_book_code`, ...).
pub type Meta = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeTypeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeType {
    pub name: String,
    /// Injected by meta-feature enrichment.
    #[serde(default)]
    pub is_meta: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationType {
    pub name: String,
    pub src: NodeTypeId,
    pub dst: NodeTypeId,
    /// Edges of this relation are prediction targets.
    #[serde(default)]
    pub is_target: bool,
    /// Set when this relation is the transpose of `reverse_of`.
    #[serde(default)]
    pub is_reverse: bool,
    #[serde(default)]
    pub is_meta: bool,
    #[serde(default)]
    pub reverse_of: Option<RelationId>,
}

/// Node types plus relation declarations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub node_types: Vec<NodeType>,
    pub relations: Vec<RelationType>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node_type(&mut self, name: &str) -> Result<NodeTypeId> {
        self.push_node_type(NodeType {
            name: name.to_owned(),
            is_meta: false,
        })
    }

    pub(crate) fn push_node_type(&mut self, node_type: NodeType) -> Result<NodeTypeId> {
        if node_type.name.is_empty() {
            return Err(Error::Schema("node type name must be nonempty".into()));
        }
        if self.node_type_id(&node_type.name).is_some() {
            return Err(Error::Schema(format!(
                "node type `{}` declared twice",
                node_type.name
            )));
        }
        self.node_types.push(node_type);
        Ok(NodeTypeId(self.node_types.len() - 1))
    }

    /// Declares a forward relation. Reverse relations are produced by
    /// [`add_reverse_relations`].
    pub fn add_relation(
        &mut self,
        name: &str,
        src: NodeTypeId,
        dst: NodeTypeId,
        is_target: bool,
    ) -> Result<RelationId> {
        self.push_relation(RelationType {
            name: name.to_owned(),
            src,
            dst,
            is_target,
            is_reverse: false,
            is_meta: false,
            reverse_of: None,
        })
    }

    pub(crate) fn push_relation(&mut self, rel: RelationType) -> Result<RelationId> {
        self.check_relation(&rel)?;
        self.relations.push(rel);
        Ok(RelationId(self.relations.len() - 1))
    }

    fn check_relation(&self, rel: &RelationType) -> Result<()> {
        if rel.name.is_empty() {
            return Err(Error::Schema("relation name must be nonempty".into()));
        }
        if self.relation_id(&rel.name).is_some() {
            return Err(Error::Schema(format!(
                "relation `{}` declared twice",
                rel.name
            )));
        }
        for t in [rel.src, rel.dst] {
            if t.0 >= self.node_types.len() {
                return Err(Error::Schema(format!(
                    "relation `{}` references undeclared node type #{}",
                    rel.name, t.0
                )));
            }
        }
        if rel.is_target && rel.is_meta {
            return Err(Error::Schema(format!(
                "relation `{}` cannot be both a target and a meta relation",
                rel.name
            )));
        }
        if rel.is_reverse {
            let fwd = rel.reverse_of.ok_or_else(|| {
                Error::Schema(format!("reverse relation `{}` lacks its forward", rel.name))
            })?;
            let fwd = self.relations.get(fwd.0).ok_or_else(|| {
                Error::Schema(format!("reverse relation `{}` points nowhere", rel.name))
            })?;
            if fwd.src != rel.dst || fwd.dst != rel.src {
                return Err(Error::Schema(format!(
                    "reverse relation `{}` does not swap the endpoints of `{}`",
                    rel.name, fwd.name
                )));
            }
        }
        Ok(())
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.node_types
            .iter()
            .position(|t| t.name == name)
            .map(NodeTypeId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations
            .iter()
            .position(|r| r.name == name)
            .map(RelationId)
    }

    pub fn node_type(&self, id: NodeTypeId) -> &NodeType {
        &self.node_types[id.0]
    }

    pub fn relation(&self, id: RelationId) -> &RelationType {
        &self.relations[id.0]
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.relations.len()).map(RelationId)
    }

    pub fn node_type_ids(&self) -> impl Iterator<Item = NodeTypeId> + '_ {
        (0..self.node_types.len()).map(NodeTypeId)
    }

    pub fn target_relations(&self) -> Vec<RelationId> {
        self.relation_ids()
            .filter(|&r| self.relation(r).is_target)
            .collect()
    }

    /// The reverse twin of a forward relation, if one was declared.
    pub fn reverse_of(&self, forward: RelationId) -> Option<RelationId> {
        self.relation_ids()
            .find(|&r| self.relation(r).reverse_of == Some(forward))
    }
}

/// Per-node-type feature table.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureTable {
    /// One dense row per node.
    Dense(Arc<Array2<f32>>),
    /// No input features; the encoder substitutes a trainable per-type vector.
    Learnable,
}

impl FeatureTable {
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeatureTable::Dense(m) => Some(m.ncols()),
            FeatureTable::Learnable => None,
        }
    }

    pub fn dense(&self) -> Option<&Array2<f32>> {
        match self {
            FeatureTable::Dense(m) => Some(m),
            FeatureTable::Learnable => None,
        }
    }

    pub fn is_learnable(&self) -> bool {
        matches!(self, FeatureTable::Learnable)
    }
}

/// Everything attached to the nodes of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub ids: Vec<String>,
    /// Days since the Unix epoch, when known.
    pub dates: Vec<Option<i32>>,
    pub meta: Vec<Meta>,
    pub features: FeatureTable,
}

impl NodeTable {
    pub fn empty() -> Self {
        Self {
            ids: Vec::new(),
            dates: Vec::new(),
            meta: Vec::new(),
            features: FeatureTable::Learnable,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Typed nodes and per-relation adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    schema: Schema,
    nodes: Vec<Arc<NodeTable>>,
    edges: Vec<Arc<Adjacency>>,
}

impl HeteroGraph {
    /// Assembles a graph without checking invariants. Use [`validate_graph`]
    /// to inspect the result, or [`GraphBuilder`] for checked construction.
    pub fn from_parts_unchecked(
        schema: Schema,
        nodes: Vec<Arc<NodeTable>>,
        edges: Vec<Arc<Adjacency>>,
    ) -> Self {
        Self {
            schema,
            nodes,
            edges,
        }
    }

    /// Assembles a graph and fails on the first invariant violation.
    pub fn from_parts(
        schema: Schema,
        nodes: Vec<Arc<NodeTable>>,
        edges: Vec<Arc<Adjacency>>,
    ) -> Result<Self> {
        let g = Self::from_parts_unchecked(schema, nodes, edges);
        let report = validate_graph(&g);
        match report.violations.into_iter().next() {
            None => Ok(g),
            Some(v) => Err(v.into_error(&g)),
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn num_node_types(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_count(&self, t: NodeTypeId) -> usize {
        self.nodes[t.0].len()
    }

    pub fn total_nodes(&self) -> usize {
        self.nodes.iter().map(|n| n.len()).sum()
    }

    pub fn nodes(&self, t: NodeTypeId) -> &NodeTable {
        &self.nodes[t.0]
    }

    pub(crate) fn node_tables(&self) -> &[Arc<NodeTable>] {
        &self.nodes
    }

    pub(crate) fn adjacencies(&self) -> &[Arc<Adjacency>] {
        &self.edges
    }

    pub fn features(&self, t: NodeTypeId) -> &FeatureTable {
        &self.nodes[t.0].features
    }

    pub fn adjacency(&self, r: RelationId) -> &Adjacency {
        &self.edges[r.0]
    }

    pub fn num_edges(&self, r: RelationId) -> usize {
        self.edges[r.0].num_edges()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.iter().map(|a| a.num_edges()).sum()
    }

    /// Out-neighbors of `node` under relation `r`, sorted ascending.
    pub fn neighbors(&self, r: RelationId, node: usize) -> &[u32] {
        self.edges[r.0].neighbors(node)
    }

    pub fn node_type_id(&self, name: &str) -> Option<NodeTypeId> {
        self.schema.node_type_id(name)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.schema.relation_id(name)
    }

    pub fn relation(&self, r: RelationId) -> &RelationType {
        self.schema.relation(r)
    }

    pub fn target_relations(&self) -> Vec<RelationId> {
        self.schema.target_relations()
    }

    /// Node type by name, or a schema error.
    pub fn require_node_type(&self, name: &str) -> Result<NodeTypeId> {
        self.node_type_id(name)
            .ok_or_else(|| Error::Schema(format!("unknown node type `{name}`")))
    }

    /// Relation by name, or a schema error.
    pub fn require_relation(&self, name: &str) -> Result<RelationId> {
        self.relation_id(name)
            .ok_or_else(|| Error::Schema(format!("unknown relation `{name}`")))
    }

    /// Copy of this graph with some relations' edges replaced.
    pub(crate) fn with_edge_sets(&self, replaced: Vec<(RelationId, Adjacency)>) -> Self {
        let mut g = self.clone();
        for (r, adj) in replaced {
            g.edges[r.0] = Arc::new(adj);
        }
        g
    }

    /// Subgraph induced by the kept nodes, with indices compacted per type in
    /// their original order. Returns the graph and the new→old index map per
    /// node type.
    pub fn induced_subgraph(&self, keep: &[Vec<bool>]) -> (HeteroGraph, Vec<Vec<u32>>) {
        assert_eq!(keep.len(), self.nodes.len(), "one mask per node type");
        let mut new_to_old: Vec<Vec<u32>> = Vec::with_capacity(keep.len());
        let mut old_to_new: Vec<Vec<u32>> = Vec::with_capacity(keep.len());
        for (t, mask) in keep.iter().enumerate() {
            assert_eq!(mask.len(), self.nodes[t].len());
            let mut fwd = vec![u32::MAX; mask.len()];
            let mut back = Vec::new();
            for (i, &k) in mask.iter().enumerate() {
                if k {
                    fwd[i] = back.len() as u32;
                    back.push(i as u32);
                }
            }
            old_to_new.push(fwd);
            new_to_old.push(back);
        }
        let nodes = self
            .nodes
            .iter()
            .zip(&new_to_old)
            .map(|(table, back)| {
                if back.len() == table.len() {
                    return Arc::clone(table);
                }
                let pick = |i: &u32| *i as usize;
                Arc::new(NodeTable {
                    ids: back.iter().map(|i| table.ids[pick(i)].clone()).collect(),
                    dates: back.iter().map(|i| table.dates[pick(i)]).collect(),
                    meta: back.iter().map(|i| table.meta[pick(i)].clone()).collect(),
                    features: match &table.features {
                        FeatureTable::Learnable => FeatureTable::Learnable,
                        FeatureTable::Dense(m) => {
                            let rows: Vec<usize> = back.iter().map(pick).collect();
                            FeatureTable::Dense(Arc::new(m.select(ndarray::Axis(0), &rows)))
                        }
                    },
                })
            })
            .collect();
        let edges = self
            .schema
            .relation_ids()
            .map(|r| {
                let rel = self.schema.relation(r);
                let (ms, md) = (&old_to_new[rel.src.0], &old_to_new[rel.dst.0]);
                let pairs: Vec<(u32, u32)> = self.edges[r.0]
                    .iter()
                    .filter_map(|(u, v)| {
                        let (nu, nv) = (ms[u as usize], md[v as usize]);
                        (nu != u32::MAX && nv != u32::MAX).then_some((nu, nv))
                    })
                    .collect();
                Arc::new(Adjacency::from_sorted_unique(new_to_old[rel.src.0].len(), pairs))
            })
            .collect();
        (
            HeteroGraph {
                schema: self.schema.clone(),
                nodes,
                edges,
            },
            new_to_old,
        )
    }

    /// Drops the named relations and node types, compacting ids. Node types
    /// are removed only if no remaining relation references them.
    pub(crate) fn without(&self, drop_types: &[NodeTypeId], drop_relations: &[RelationId]) -> Self {
        let mut type_map = vec![None; self.nodes.len()];
        let mut schema = Schema::new();
        let mut nodes = Vec::new();
        for t in self.schema.node_type_ids() {
            if !drop_types.contains(&t) {
                type_map[t.0] = Some(NodeTypeId(schema.node_types.len()));
                schema.node_types.push(self.schema.node_type(t).clone());
                nodes.push(Arc::clone(&self.nodes[t.0]));
            }
        }
        let mut rel_map = vec![None; self.schema.relations.len()];
        let mut edges = Vec::new();
        for r in self.schema.relation_ids() {
            if drop_relations.contains(&r) {
                continue;
            }
            let rel = self.schema.relation(r);
            rel_map[r.0] = Some(RelationId(schema.relations.len()));
            schema.relations.push(RelationType {
                src: type_map[rel.src.0].expect("relation endpoint type dropped"),
                dst: type_map[rel.dst.0].expect("relation endpoint type dropped"),
                ..rel.clone()
            });
            edges.push(Arc::clone(&self.edges[r.0]));
        }
        for rel in &mut schema.relations {
            rel.reverse_of = rel.reverse_of.and_then(|f| rel_map[f.0]);
        }
        HeteroGraph {
            schema,
            nodes,
            edges,
        }
    }

    /// Appends node types and relations. Used by enrichment.
    pub(crate) fn extended(
        &self,
        new_types: Vec<(NodeType, NodeTable)>,
        new_relations: Vec<(RelationType, Adjacency)>,
    ) -> Result<Self> {
        let mut g = self.clone();
        for (t, table) in new_types {
            g.schema.push_node_type(t)?;
            g.nodes.push(Arc::new(table));
        }
        for (rel, adj) in new_relations {
            g.schema.push_relation(rel)?;
            g.edges.push(Arc::new(adj));
        }
        Ok(g)
    }
}

/// Adds a reverse relation (`rev-<name>`, swapped endpoints, transposed
/// edges) for each listed forward relation.
///
/// Reverses of target relations are not themselves targets; they inherit
/// the `is_meta` flag.
pub fn add_reverse_relations(g: &HeteroGraph, relations: &[RelationId]) -> Result<HeteroGraph> {
    let mut added = Vec::with_capacity(relations.len());
    for &r in relations {
        let rel = g
            .schema
            .relations
            .get(r.0)
            .ok_or_else(|| Error::Schema(format!("unknown relation #{}", r.0)))?;
        if rel.is_reverse {
            return Err(Error::Schema(format!(
                "`{}` is already a reverse relation",
                rel.name
            )));
        }
        if g.schema.reverse_of(r).is_some() {
            return Err(Error::Schema(format!(
                "`{}` already has a reverse relation",
                rel.name
            )));
        }
        let reverse = RelationType {
            name: format!("rev-{}", rel.name),
            src: rel.dst,
            dst: rel.src,
            is_target: false,
            is_reverse: true,
            is_meta: rel.is_meta,
            reverse_of: Some(r),
        };
        let transposed = g.edges[r.0].transpose(g.node_count(rel.dst));
        added.push((reverse, transposed));
    }
    g.extended(Vec::new(), added)
}

/// Reverses every forward, non-meta relation that does not have one yet.
pub fn add_all_reverse_relations(g: &HeteroGraph) -> Result<HeteroGraph> {
    let todo: Vec<RelationId> = g
        .schema
        .relation_ids()
        .filter(|&r| {
            let rel = g.schema.relation(r);
            !rel.is_reverse && !rel.is_meta && g.schema.reverse_of(r).is_none()
        })
        .collect();
    add_reverse_relations(g, &todo)
}
