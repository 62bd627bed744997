//! JSON-lines graph archives.
//!
//! An archive is a directory with three files:
//!
//! * `schema.json`: node types and relation declarations,
//! * `nodes.jsonl`: one object per node, `{"id", "type", "date"?, "meta"?, "features"?}`,
//! * `edges.jsonl`: one object per edge, `{"src", "dst", "relation"}`.
//!
//! Dates are ISO `YYYY-MM-DD` strings (integer day counts are accepted on
//! read). A node's index within its type is its position among the lines of
//! that type.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, HeteroGraph, NodeRecord, NodeType, RelationId, RelationType, Schema};

pub const SCHEMA_FILE: &str = "schema.json";
pub const NODES_FILE: &str = "nodes.jsonl";
pub const EDGES_FILE: &str = "edges.jsonl";

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeTypeDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub meta: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDecl {
    pub name: String,
    pub src: String,
    pub dst: String,
    #[serde(default)]
    pub target: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub meta: bool,
    /// Name of the forward relation this one transposes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverse_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveSchema {
    pub node_types: Vec<NodeTypeDecl>,
    pub relations: Vec<RelationDecl>,
}

impl ArchiveSchema {
    pub fn from_schema(s: &Schema) -> Self {
        let name = |t: crate::graph::NodeTypeId| s.node_type(t).name.clone();
        Self {
            node_types: s
                .node_types
                .iter()
                .map(|t| NodeTypeDecl {
                    name: t.name.clone(),
                    meta: t.is_meta,
                })
                .collect(),
            relations: s
                .relations
                .iter()
                .map(|r| RelationDecl {
                    name: r.name.clone(),
                    src: name(r.src),
                    dst: name(r.dst),
                    target: r.is_target,
                    meta: r.is_meta,
                    reverse_of: r.reverse_of.map(|f| s.relation(f).name.clone()),
                })
                .collect(),
        }
    }

    pub fn to_schema(&self) -> Result<Schema> {
        let mut s = Schema::new();
        for t in &self.node_types {
            s.push_node_type(NodeType {
                name: t.name.clone(),
                is_meta: t.meta,
            })?;
        }
        let type_id = |n: &str, rel: &str| {
            s.node_type_id(n).ok_or_else(|| {
                Error::Schema(format!("relation `{rel}` uses undeclared node type `{n}`"))
            })
        };
        let mut relations = Vec::with_capacity(self.relations.len());
        for r in &self.relations {
            relations.push((type_id(&r.src, &r.name)?, type_id(&r.dst, &r.name)?));
        }
        for (r, (src, dst)) in self.relations.iter().zip(relations) {
            let reverse_of = match &r.reverse_of {
                None => None,
                Some(f) => Some(s.relation_id(f).ok_or_else(|| {
                    Error::Schema(format!(
                        "reverse relation `{}` must follow its forward `{f}`",
                        r.name
                    ))
                })?),
            };
            s.push_relation(RelationType {
                name: r.name.clone(),
                src,
                dst,
                is_target: r.target,
                is_reverse: reverse_of.is_some(),
                is_meta: r.meta,
                reverse_of,
            })?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum DateField {
    Days(i32),
    Iso(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeLine {
    id: String,
    #[serde(rename = "type")]
    node_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<DateField>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeLine {
    src: String,
    dst: String,
    relation: String,
}

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

pub fn parse_date(s: &str) -> Option<i32> {
    let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    i32::try_from((d - epoch()).num_days()).ok()
}

pub fn format_date(days: i32) -> String {
    (epoch() + chrono::Duration::days(days.into()))
        .format("%Y-%m-%d")
        .to_string()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

/// Parses every nonblank line of a JSON-lines file, reporting 1-based line
/// numbers on failure.
fn read_lines<T: DeserializeOwned>(path: &Path, mut each: impl FnMut(usize, T) -> Result<()>) -> Result<()> {
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        each(i + 1, value)?;
    }
    Ok(())
}

fn line_error(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an archive directory.
pub fn load_graph(dir: &Path) -> Result<HeteroGraph> {
    let schema_file: ArchiveSchema = read_json(&dir.join(SCHEMA_FILE))?;
    let schema = schema_file.to_schema()?;
    let nt = schema.node_types.len();
    let mut nodes: Vec<Vec<NodeRecord>> = vec![Vec::new(); nt];
    let mut index: Vec<HashMap<String, usize>> = vec![HashMap::new(); nt];

    let nodes_path = dir.join(NODES_FILE);
    read_lines(&nodes_path, |line, n: NodeLine| {
        let t = schema.node_type_id(&n.node_type).ok_or_else(|| {
            Error::Schema(format!(
                "{}:{line}: node type `{}` is not declared in the schema",
                nodes_path.display(),
                n.node_type
            ))
        })?;
        let date = match n.date {
            None => None,
            Some(DateField::Days(d)) => Some(d),
            Some(DateField::Iso(s)) => Some(parse_date(&s).ok_or_else(|| {
                line_error(&nodes_path, line, format!("`{s}` is not a YYYY-MM-DD date"))
            })?),
        };
        if index[t.0].insert(n.id.clone(), nodes[t.0].len()).is_some() {
            return Err(line_error(
                &nodes_path,
                line,
                format!("duplicate {} id `{}`", n.node_type, n.id),
            ));
        }
        nodes[t.0].push(NodeRecord {
            id: n.id,
            date,
            meta: n.meta,
            features: n.features,
        });
        Ok(())
    })?;

    let edges_path = dir.join(EDGES_FILE);
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); schema.relations.len()];
    read_lines(&edges_path, |line, e: EdgeLine| {
        let r = schema.relation_id(&e.relation).ok_or_else(|| {
            Error::Schema(format!(
                "{}:{line}: relation `{}` is not declared in the schema",
                edges_path.display(),
                e.relation
            ))
        })?;
        let rel = schema.relation(r);
        let find = |t: crate::graph::NodeTypeId, id: &str| {
            index[t.0].get(id).copied().ok_or_else(|| {
                line_error(
                    &edges_path,
                    line,
                    format!(
                        "`{}` edge references unknown {} `{id}`",
                        e.relation,
                        schema.node_type(t).name
                    ),
                )
            })
        };
        edges[r.0].push((find(rel.src, &e.src)?, find(rel.dst, &e.dst)?));
        Ok(())
    })?;

    build_graph(schema, nodes, edges)
}

/// Writes `g` as an archive, creating `dir` if needed. Nodes are written in
/// index order per type and edges in canonical order per relation.
pub fn save_graph(g: &HeteroGraph, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(SCHEMA_FILE), &ArchiveSchema::from_schema(g.schema()))?;

    let writer = |p: PathBuf| -> Result<(BufWriter<File>, PathBuf)> {
        let f = File::create(&p).map_err(|e| Error::io(&p, e))?;
        Ok((BufWriter::new(f), p))
    };
    let (mut w, path) = writer(dir.join(NODES_FILE))?;
    for t in g.schema().node_type_ids() {
        let table = g.nodes(t);
        for i in 0..table.len() {
            let line = NodeLine {
                id: table.ids[i].clone(),
                node_type: g.schema().node_type(t).name.clone(),
                date: table.dates[i].map(|d| DateField::Iso(format_date(d))),
                meta: table.meta[i].clone(),
                features: table.features.dense().map(|m| m.row(i).to_vec()),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let (mut w, path) = writer(dir.join(EDGES_FILE))?;
    for r in g.schema().relation_ids() {
        write_edges(g, r, &mut w, &path)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

fn write_edges(g: &HeteroGraph, r: RelationId, w: &mut impl Write, path: &Path) -> Result<()> {
    let rel = g.relation(r);
    let (src, dst) = (g.nodes(rel.src), g.nodes(rel.dst));
    for (u, v) in g.adjacency(r).iter() {
        let line = EdgeLine {
            src: src.ids[u as usize].clone(),
            dst: dst.ids[v as usize].clone(),
            relation: rel.name.clone(),
        };
        serde_json::to_writer(&mut *w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
