//! Featured graphs, representation targets and the generalized-MPNN graph
//! transformations.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::str::FromStr;

use crate::{Error, Result, Scalar};

/// Undirected graph with dense node ids `0..n` and one feature vector per node.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturedGraph<T> {
    id: String,
    adjacency: Vec<Vec<usize>>,
    features: Vec<Vec<T>>,
    dim: usize,
}

impl<T: Scalar> FeaturedGraph<T> {
    /// Builds a graph from an edge list. Duplicate edges collapse; self-loops,
    /// out-of-range endpoints and ragged features are rejected.
    pub fn new(id: impl Into<String>, n: usize, edges: &[(usize, usize)], features: Vec<Vec<T>>) -> Result<Self> {
        if features.len() != n {
            return Err(Error::InvalidGraph(format!("{} feature rows for {n} nodes", features.len())));
        }
        let dim = features.first().map_or(0, Vec::len);
        if let Some(bad) = features.iter().find(|f| f.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::NodeOutOfRange { node: w, n });
                }
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { id: id.into(), adjacency, features, dim })
    }

    /// Wraps raw parts without any checking; [`validate`](Self::validate)
    /// reports what is wrong with them.
    pub fn from_raw_parts(id: impl Into<String>, adjacency: Vec<Vec<usize>>, features: Vec<Vec<T>>, dim: usize) -> Self {
        Self { id: id.into(), adjacency, features, dim }
    }

    pub fn empty(id: impl Into<String>, dim: usize) -> Self {
        Self { id: id.into(), adjacency: Vec::new(), features: Vec::new(), dim }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn feature(&self, v: usize) -> &[T] {
        &self.features[v]
    }

    pub fn features(&self) -> &[Vec<T>] {
        &self.features
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, ns)| ns.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange { node: v, n: self.node_count() })
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let n = self.node_count();
        let mut report = ValidationReport { node_count: n, ..Default::default() };
        for (u, ns) in self.adjacency.iter().enumerate() {
            if ns.windows(2).any(|w| w[0] >= w[1]) {
                report.unsorted_adjacency.push(u);
            }
            for &v in ns {
                if v >= n {
                    report.out_of_range.push((u, v));
                } else if v == u {
                    report.self_loops.push(u);
                } else if !self.adjacency[v].contains(&u) {
                    report.symmetry_violations.push((u, v));
                }
            }
        }
        if self.features.len() != n {
            report.feature_rows = Some(self.features.len());
        }
        for (u, f) in self.features.iter().enumerate() {
            if f.len() != self.dim {
                report.dimension_mismatches.push(u);
            } else if f.iter().all(|x| *x == T::zero()) {
                report.zero_feature_nodes.push(u);
            }
        }
        report
    }

    /// Hop distances from `src`; `None` marks unreachable nodes.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count()];
        let mut queue = VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for &v in &self.adjacency[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Nodes at hop distance `1..=k` from `u` (excluding `u`), sorted.
    pub fn k_hop_neighborhood(&self, u: usize, k: usize) -> Vec<usize> {
        self.bfs_distances(u).into_iter().enumerate().filter_map(|(v, d)| d.filter(|&d| d >= 1 && d <= k).map(|_| v)).collect()
    }

    /// Subgraph induced on `nodes` (sorted, deduplicated); node `i` of the
    /// result corresponds to `nodes[i]`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Self {
        let index = |v: usize| nodes.binary_search(&v).ok();
        let adjacency = nodes.iter().map(|&u| self.adjacency[u].iter().filter_map(|&v| index(v)).collect()).collect();
        let features = nodes.iter().map(|&u| self.features[u].clone()).collect();
        Self { id: self.id.clone(), adjacency, features, dim: self.dim }
    }

    fn remove_edge(&mut self, u: usize, v: usize) {
        self.adjacency[u].retain(|&w| w != v);
        self.adjacency[v].retain(|&w| w != u);
    }

    pub fn cast<U: Scalar>(&self) -> FeaturedGraph<U> {
        FeaturedGraph {
            id: self.id.clone(),
            adjacency: self.adjacency.clone(),
            features: self.features.iter().map(|f| f.iter().map(|x| U::lit(x.to_f64_lossy())).collect()).collect(),
            dim: self.dim,
        }
    }

    /// Same graph with nodes renamed by `perm` (old id `v` becomes `perm[v]`).
    pub fn relabeled(&self, perm: &[usize]) -> Self {
        let n = self.node_count();
        let mut adjacency = vec![Vec::new(); n];
        let mut features = vec![Vec::new(); n];
        for v in 0..n {
            let mut ns: Vec<usize> = self.adjacency[v].iter().map(|&u| perm[u]).collect();
            ns.sort_unstable();
            adjacency[perm[v]] = ns;
            features[perm[v]] = self.features[v].clone();
        }
        Self { id: self.id.clone(), adjacency, features, dim: self.dim }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub node_count: usize,
    pub symmetry_violations: Vec<(usize, usize)>,
    pub self_loops: Vec<usize>,
    pub out_of_range: Vec<(usize, usize)>,
    pub unsorted_adjacency: Vec<usize>,
    pub dimension_mismatches: Vec<usize>,
    /// Set when the number of feature rows differs from the node count.
    pub feature_rows: Option<usize>,
    pub zero_feature_nodes: Vec<usize>,
}

impl ValidationReport {
    /// Every node feature is nonzero, as required for distance-domain inputs.
    pub fn nonzero_features(&self) -> bool {
        self.zero_feature_nodes.is_empty()
    }

    /// Structural checks only; zero features are allowed.
    pub fn is_well_formed(&self) -> bool {
        self.symmetry_violations.is_empty()
            && self.self_loops.is_empty()
            && self.out_of_range.is_empty()
            && self.unsorted_adjacency.is_empty()
            && self.dimension_mismatches.is_empty()
            && self.feature_rows.is_none()
    }

    pub fn passes_all(&self) -> bool {
        self.is_well_formed() && self.nonzero_features()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TargetKind {
    Node,
    Link,
}

/// A pair `(G, S)` from a node- or link-representation task.
#[derive(Clone, Debug)]
pub struct RepresentationTarget<'g, T> {
    pub graph: &'g FeaturedGraph<T>,
    pub subset: Vec<usize>,
    pub kind: TargetKind,
}

impl<'g, T: Scalar> RepresentationTarget<'g, T> {
    pub fn node(graph: &'g FeaturedGraph<T>, u: usize) -> Result<Self> {
        graph.check_node(u)?;
        Ok(Self { graph, subset: vec![u], kind: TargetKind::Node })
    }

    pub fn link(graph: &'g FeaturedGraph<T>, u: usize, v: usize) -> Result<Self> {
        graph.check_node(u)?;
        graph.check_node(v)?;
        if u == v {
            return Err(Error::InvalidTarget(format!("link endpoints coincide ({u})")));
        }
        Ok(Self { graph, subset: vec![u, v], kind: TargetKind::Link })
    }

    pub fn validate(&self) -> Result<()> {
        for &u in &self.subset {
            self.graph.check_node(u)?;
        }
        match (self.kind, self.subset.as_slice()) {
            (TargetKind::Node, [_]) => Ok(()),
            (TargetKind::Link, [u, v]) if u != v => Ok(()),
            (kind, s) => Err(Error::InvalidTarget(format!("{kind:?} target with subset {s:?}"))),
        }
    }

    /// `graph_id:u` or `graph_id:u-v`.
    pub fn label(&self) -> String {
        let s: Vec<String> = self.subset.iter().map(ToString::to_string).collect();
        format!("{}:{}", self.graph.id(), s.join("-"))
    }
}

/// The transformation function `T` of a generalized MPNN.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    Identity,
    /// Enclosing subgraph of radius `radius` around a link, labelled with
    /// double-radius distances; the target link itself is removed.
    SealLite {
        radius: usize,
    },
    /// Graph on `V(G)²` with `{(u,v),(u,y)}` an edge iff `y ∈ N(v)`.
    PairwiseConditional,
}

impl FromStr for TransformKind {
    type Err = Error;

    /// `identity`, `seal[:radius]` or `pairwise`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "seal" => Ok(Self::SealLite { radius: 1 }),
            "pairwise" => Ok(Self::PairwiseConditional),
            _ => match s.strip_prefix("seal:").map(str::parse) {
                Some(Ok(radius)) => Ok(Self::SealLite { radius }),
                _ => Err(Error::InvalidParameter(format!("unknown transform `{s}` (identity|seal[:r]|pairwise)"))),
            },
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::SealLite { radius } => write!(f, "seal:{radius}"),
            Self::PairwiseConditional => f.write_str("pairwise"),
        }
    }
}

/// Optional override of the transform's native selection function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SelectionKind {
    #[default]
    Native,
    /// `{u, v} ∪ (N^k(u) ∩ N^k(v))` on the untransformed graph, as used by
    /// neural common neighbors.
    CommonNeighbors { hops: usize },
}

/// Output of a transformation: the transformed graph and the selected nodes.
#[derive(Clone, Debug)]
pub struct Transformed<'g, T: Clone> {
    pub graph: Cow<'g, FeaturedGraph<T>>,
    pub selected: Vec<usize>,
}

pub fn transform<'g, T: Scalar>(target: &RepresentationTarget<'g, T>, kind: TransformKind) -> Result<Transformed<'g, T>> {
    target.validate()?;
    let g = target.graph;
    match kind {
        TransformKind::Identity => Ok(Transformed { graph: Cow::Borrowed(g), selected: target.subset.clone() }),
        TransformKind::SealLite { radius } => {
            if radius == 0 {
                return Err(Error::InvalidParameter("SEAL radius must be at least 1".into()));
            }
            let (u, v) = link_endpoints(target, "SealLite")?;
            Ok(seal_subgraph(g, u, v, radius))
        }
        TransformKind::PairwiseConditional => {
            let (u, v) = link_endpoints(target, "PairwiseConditional")?;
            Ok(pairwise_conditional(g, u, v))
        }
    }
}

/// [`transform`] followed by the selection override.
pub fn transform_select<'g, T: Scalar>(target: &RepresentationTarget<'g, T>, kind: TransformKind, selection: SelectionKind) -> Result<Transformed<'g, T>> {
    match selection {
        SelectionKind::Native => transform(target, kind),
        SelectionKind::CommonNeighbors { hops } => {
            if kind != TransformKind::Identity {
                return Err(Error::InvalidParameter("common-neighbor selection requires the identity transform".into()));
            }
            let (u, v) = link_endpoints(target, "CommonNeighbors")?;
            let mut selected = vec![u, v];
            selected.extend(common_neighbors(target.graph, u, v, hops));
            Ok(Transformed { graph: Cow::Borrowed(target.graph), selected })
        }
    }
}

/// `N^k(u) ∩ N^k(v)` without the endpoints themselves, sorted.
pub fn common_neighbors<T: Scalar>(g: &FeaturedGraph<T>, u: usize, v: usize, hops: usize) -> Vec<usize> {
    let a = g.k_hop_neighborhood(u, hops);
    let b = g.k_hop_neighborhood(v, hops);
    // Sorted-list intersection.
    let (mut i, mut j, mut out) = (0, 0, Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if a[i] != u && a[i] != v {
                    out.push(a[i]);
                }
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn link_endpoints<T: Scalar>(target: &RepresentationTarget<'_, T>, what: &str) -> Result<(usize, usize)> {
    match (target.kind, target.subset.as_slice()) {
        (TargetKind::Link, &[u, v]) => Ok((u, v)),
        _ => Err(Error::InvalidTarget(format!("{what} requires a link target"))),
    }
}

fn seal_subgraph<T: Scalar>(g: &FeaturedGraph<T>, u: usize, v: usize, radius: usize) -> Transformed<'static, T> {
    let du = g.bfs_distances(u);
    let dv = g.bfs_distances(v);
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&w| du[w].is_some_and(|d| d <= radius) || dv[w].is_some_and(|d| d <= radius)).collect();
    let mut sub = g.induced_subgraph(&nodes);
    let iu = nodes.binary_search(&u).expect("u in its own enclosing subgraph");
    let iv = nodes.binary_search(&v).expect("v in its own enclosing subgraph");
    sub.remove_edge(iu, iv);
    // Double-radius labels on the subgraph without the target link;
    // unreachable distances are encoded as 0.
    let su = sub.bfs_distances(iu);
    let sv = sub.bfs_distances(iv);
    let label = |d: Option<usize>| T::from_usize_lossy(d.unwrap_or(0));
    for (w, f) in sub.features.iter_mut().enumerate() {
        f.push(label(su[w]));
        f.push(label(sv[w]));
    }
    sub.dim += 2;
    sub.id = format!("{}/seal({u},{v})", g.id);
    let selected = (0..nodes.len()).collect();
    Transformed { graph: Cow::Owned(sub), selected }
}

/// Index of the pair node `(a, b)` in the pairwise conditional graph.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    a * n + b
}

fn pairwise_conditional<T: Scalar>(g: &FeaturedGraph<T>, u: usize, v: usize) -> Transformed<'static, T> {
    let n = g.node_count();
    let mut adjacency = vec![Vec::new(); n * n];
    let mut features = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            adjacency[pair_index(n, a, b)] = g.neighbors(b).iter().map(|&y| pair_index(n, a, y)).collect();
            // INIT: original feature of b plus an indicator separating (a, a) from (a, b).
            let mut f = g.feature(b).to_vec();
            f.push(if a == b { T::one() } else { T::zero() });
            features.push(f);
        }
    }
    let graph = FeaturedGraph { id: format!("{}/pairwise", g.id), adjacency, features, dim: g.dim + 1 };
    let selected = g.neighbors(v).iter().map(|&w| pair_index(n, u, w)).collect();
    Transformed { graph: Cow::Owned(graph), selected }
}

/// Disjoint union; the second component holds each input's node-id offset.
pub fn disjoint_union<T: Scalar>(graphs: &[&FeaturedGraph<T>]) -> Result<(FeaturedGraph<T>, Vec<usize>)> {
    let dim = graphs.first().map_or(0, |g| g.dim);
    let mut adjacency = Vec::new();
    let mut features = Vec::new();
    let mut offsets = Vec::with_capacity(graphs.len());
    let mut ids = Vec::new();
    for g in graphs {
        if g.dim != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: g.dim });
        }
        let off = adjacency.len();
        offsets.push(off);
        ids.push(g.id.clone());
        adjacency.extend(g.adjacency.iter().map(|ns| ns.iter().map(|&v| v + off).collect::<Vec<_>>()));
        features.extend(g.features.iter().cloned());
    }
    let id = ids.join("+");
    Ok((FeaturedGraph { id, adjacency, features, dim }, offsets))
}

/// Bitwise key of a feature vector; `-0.0` and `0.0` share a key.
pub(crate) fn feature_key<T: Scalar>(f: &[T]) -> Vec<u64> {
    f.iter().map(|x| (x.to_f64_lossy() + 0.0).to_bits()).collect()
}
