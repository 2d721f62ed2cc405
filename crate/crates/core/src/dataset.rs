//! Multi-graph datasets with node and link labels.
//!
//! JSON layout:
//! `{"d": 2, "graphs": [{"id": "g0", "n": 3, "edges": [[0, 1]], "features": [[..], ..], "labels": {"0": 1, "0-1": 0}}]}`.
//! Plain node ids label nodes, `u-v` keys with `u < v` label links.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{FeaturedGraph, RepresentationTarget};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledGraph<T> {
    pub graph: FeaturedGraph<T>,
    pub node_labels: BTreeMap<usize, u8>,
    pub link_labels: BTreeMap<(usize, usize), u8>,
}

impl<T: Scalar> LabeledGraph<T> {
    pub fn unlabeled(graph: FeaturedGraph<T>) -> Self {
        Self { graph, node_labels: BTreeMap::new(), link_labels: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T> {
    pub d: usize,
    pub graphs: Vec<LabeledGraph<T>>,
}

#[derive(Serialize, Deserialize)]
struct RawDataset {
    d: usize,
    graphs: Vec<RawGraph>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    id: String,
    n: usize,
    edges: Vec<[usize; 2]>,
    features: Vec<Vec<f64>>,
    #[serde(default)]
    labels: BTreeMap<String, u8>,
}

/// A labelled node target, referenced by graph position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub graph: usize,
    pub node: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(d: usize, graphs: Vec<LabeledGraph<T>>) -> Result<Self> {
        for g in &graphs {
            if g.graph.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: g.graph.dim() });
            }
        }
        let mut ids: Vec<&str> = graphs.iter().map(|g| g.graph.id()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Format(format!("duplicate graph id `{}`", w[0])));
        }
        Ok(Self { d, graphs })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn graph(&self, id: &str) -> Option<&LabeledGraph<T>> {
        self.graphs.iter().find(|g| g.graph.id() == id)
    }

    pub fn graph_index(&self, id: &str) -> Option<usize> {
        self.graphs.iter().position(|g| g.graph.id() == id)
    }

    /// Every labelled node, in graph then node order.
    pub fn labeled_nodes(&self) -> Vec<(NodeRef, u8)> {
        self.graphs.iter().enumerate().flat_map(|(gi, g)| g.node_labels.iter().map(move |(&v, &y)| (NodeRef { graph: gi, node: v }, y))).collect()
    }

    pub fn node_target(&self, r: NodeRef) -> Result<RepresentationTarget<'_, T>> {
        RepresentationTarget::node(&self.graphs[r.graph].graph, r.node)
    }

    /// Node targets for every node of every graph.
    pub fn all_node_targets(&self) -> Vec<RepresentationTarget<'_, T>> {
        self.graphs.iter().flat_map(|g| (0..g.graph.node_count()).map(move |v| RepresentationTarget::node(&g.graph, v).expect("node in range"))).collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawDataset = serde_json::from_str(s)?;
        let graphs = raw.graphs.into_iter().map(|g| from_raw(g, raw.d)).collect::<Result<Vec<_>>>()?;
        Self::new(raw.d, graphs)
    }

    /// Deterministic JSON: edges as `u < v` pairs in order, labels sorted by key.
    pub fn to_json_string(&self) -> String {
        let raw = RawDataset {
            d: self.d,
            graphs: self
                .graphs
                .iter()
                .map(|g| {
                    let mut labels: BTreeMap<String, u8> = g.node_labels.iter().map(|(v, &y)| (v.to_string(), y)).collect();
                    labels.extend(g.link_labels.iter().map(|(&(u, v), &y)| (format!("{u}-{v}"), y)));
                    RawGraph {
                        id: g.graph.id().to_owned(),
                        n: g.graph.node_count(),
                        edges: g.graph.edges().map(|(u, v)| [u, v]).collect(),
                        features: g.graph.features().iter().map(|f| f.iter().map(|x| x.to_f64_lossy()).collect()).collect(),
                        labels,
                    }
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("datasets serialize")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// One graph from a whitespace-separated edge list and a feature CSV with
    /// one row per node. Lines starting with `#` are ignored.
    pub fn load_edge_list(edges: &Path, features: &Path) -> Result<Self> {
        let id = edges.file_stem().map_or_else(|| "graph".to_owned(), |s| s.to_string_lossy().into_owned());
        let graph = parse_edge_list(&id, &std::fs::read_to_string(edges)?, &std::fs::read_to_string(features)?)?;
        Self::new(graph.dim(), vec![LabeledGraph::unlabeled(graph)])
    }

    /// JSON for `.json` paths; otherwise an edge list with a sidecar
    /// `<stem>.features.csv`.
    pub fn load(path: &Path) -> Result<Self> {
        if path.extension().is_some_and(|e| e == "json") {
            return Self::load_json(path);
        }
        let stem = path.file_stem().ok_or_else(|| Error::Format("path has no file name".into()))?;
        let sidecar = path.with_file_name(format!("{}.features.csv", stem.to_string_lossy()));
        Self::load_edge_list(path, &sidecar)
    }
}

fn from_raw<T: Scalar>(g: RawGraph, d: usize) -> Result<LabeledGraph<T>> {
    if g.features.len() != g.n {
        return Err(Error::Format(format!("graph {}: {} feature rows for {} nodes", g.id, g.features.len(), g.n)));
    }
    if let Some(row) = g.features.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: row.len() });
    }
    let edges: Vec<(usize, usize)> = g.edges.iter().map(|e| (e[0], e[1])).collect();
    let features = g.features.iter().map(|r| r.iter().map(|&x| T::lit(x)).collect()).collect();
    let graph = FeaturedGraph::new(g.id.clone(), g.n, &edges, features)?;
    let mut out = LabeledGraph::unlabeled(graph);
    for (key, y) in g.labels {
        if y > 1 {
            return Err(Error::Format(format!("graph {}: label {y} is not binary", g.id)));
        }
        let bad = || Error::Format(format!("graph {}: bad label key `{key}`", g.id));
        match key.split_once('-') {
            None => {
                let v: usize = key.parse().map_err(|_| bad())?;
                out.graph.check_node(v)?;
                out.node_labels.insert(v, y);
            }
            Some((a, b)) => {
                let (u, v): (usize, usize) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if u >= v {
                    return Err(bad());
                }
                out.graph.check_node(v)?;
                out.link_labels.insert((u, v), y);
            }
        }
    }
    Ok(out)
}

fn parse_edge_list<T: Scalar>(id: &str, edges: &str, features: &str) -> Result<FeaturedGraph<T>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(features.as_bytes());
    let rows: Vec<Vec<T>> = rdr
        .records()
        .map(|r| {
            let r = r.map_err(|e| Error::Format(e.to_string()))?;
            r.iter().map(|x| x.parse::<f64>().map(T::lit).map_err(|e| Error::Format(format!("feature `{x}`: {e}")))).collect()
        })
        .collect::<Result<_>>()?;
    let mut list = Vec::new();
    for (k, line) in edges.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [a, b] = parts[..] else {
            return Err(Error::Format(format!("edge line {}: expected two node ids", k + 1)));
        };
        let p = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(format!("edge line {}: {e}", k + 1)));
        list.push((p(a)?, p(b)?));
    }
    FeaturedGraph::new(id, rows.len(), &list, rows)
}
