//! Sample dependency graphs. Samples drawn from the same graph may depend on
//! each other; samples from different graphs are independent, so the
//! dependency graph is a disjoint union of cliques.

use std::collections::BTreeMap;

use crate::graph::RepresentationTarget;
use crate::{Error, Result, Scalar};

/// Largest graph [`chromatic_number`] colors exactly when no structure is known.
pub const EXACT_COLORING_LIMIT: usize = 20;

#[derive(Clone, Debug)]
pub struct Sample<'g, T> {
    pub target: RepresentationTarget<'g, T>,
    pub label: u8,
}

#[derive(Clone, Debug, Default)]
pub struct SampleSet<'g, T> {
    pub items: Vec<Sample<'g, T>>,
}

impl<'g, T: Scalar> SampleSet<'g, T> {
    pub fn new(items: Vec<Sample<'g, T>>) -> Result<Self> {
        if let Some(s) = items.iter().find(|s| s.label > 1) {
            return Err(Error::InvalidParameter(format!("label {} is not binary", s.label)));
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn graph_ids(&self) -> Vec<&str> {
        self.items.iter().map(|s| s.target.graph.id()).collect()
    }

    /// `D_S`: the largest number of samples sharing a source graph.
    pub fn max_same_graph(&self) -> usize {
        max_same_graph(&self.graph_ids())
    }

    pub fn dependency_graph(&self) -> DependencyGraph {
        DependencyGraph::from_groups(&self.graph_ids())
    }
}

/// Largest multiplicity of any id; 0 for an empty list.
pub fn max_same_graph<S: AsRef<str>>(ids: &[S]) -> usize {
    group_sizes(ids).into_values().max().unwrap_or(0)
}

/// Multiplicity of each distinct id.
pub fn group_sizes<S: AsRef<str>>(ids: &[S]) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for id in ids {
        *m.entry(id.as_ref().to_owned()).or_insert(0) += 1;
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureHint {
    CliqueUnion,
    General,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    adjacency: Vec<Vec<usize>>,
    pub hint: StructureHint,
}

impl DependencyGraph {
    /// Edge between `i` and `j` iff they share an id.
    pub fn from_groups<S: AsRef<str>>(ids: &[S]) -> Self {
        let mut by_id: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            by_id.entry(id.as_ref()).or_default().push(i);
        }
        let mut adjacency = vec![Vec::new(); ids.len()];
        for members in by_id.values() {
            for &i in members {
                adjacency[i] = members.iter().copied().filter(|&j| j != i).collect();
            }
        }
        Self { adjacency, hint: StructureHint::CliqueUnion }
    }

    pub fn general(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::NodeOutOfRange { node: u.max(v), n });
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for a in &mut adjacency {
            a.sort_unstable();
            a.dedup();
        }
        Ok(Self { adjacency, hint: StructureHint::General })
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                for &w in &self.adjacency[comp[k]] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        self.components().iter().map(Vec::len).collect()
    }

    /// Whether every component is a clique.
    pub fn is_clique_union(&self) -> bool {
        self.components().iter().all(|c| c.iter().all(|&v| self.adjacency[v].len() == c.len() - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    pub chi: usize,
    pub colors: Vec<usize>,
    /// `false` when `chi` is only a DSATUR upper bound.
    pub exact: bool,
}

pub fn chromatic_number(g: &DependencyGraph) -> Coloring {
    let n = g.node_count();
    if g.hint == StructureHint::CliqueUnion {
        debug_assert!(g.is_clique_union());
        let mut colors = vec![0; n];
        for comp in g.components() {
            for (k, &v) in comp.iter().enumerate() {
                colors[v] = k;
            }
        }
        let chi = g.component_sizes().into_iter().max().unwrap_or(0);
        return Coloring { chi, colors, exact: true };
    }
    if n <= EXACT_COLORING_LIMIT {
        exact_coloring(g)
    } else {
        dsatur(g)
    }
}

/// Greedy DSATUR: repeatedly color the vertex with the most distinct neighbor
/// colors (ties: higher degree, then smaller index) with its smallest free color.
pub fn dsatur(g: &DependencyGraph) -> Coloring {
    let n = g.node_count();
    let mut colors = vec![usize::MAX; n];
    for _ in 0..n {
        let sat = |v: usize| {
            let mut cs: Vec<usize> = g.neighbors(v).iter().map(|&w| colors[w]).filter(|&c| c != usize::MAX).collect();
            cs.sort_unstable();
            cs.dedup();
            cs.len()
        };
        let v = (0..n)
            .filter(|&v| colors[v] == usize::MAX)
            .max_by(|&a, &b| (sat(a), g.neighbors(a).len(), std::cmp::Reverse(a)).cmp(&(sat(b), g.neighbors(b).len(), std::cmp::Reverse(b))))
            .expect("an uncolored vertex remains");
        colors[v] = (0..).find(|c| g.neighbors(v).iter().all(|&w| colors[w] != *c)).expect("some color is free");
    }
    let chi = colors.iter().map(|&c| c + 1).max().unwrap_or(0);
    Coloring { chi, colors, exact: false }
}

/// Smallest `k` admitting a proper coloring, by backtracking.
pub fn exact_coloring(g: &DependencyGraph) -> Coloring {
    let n = g.node_count();
    if n == 0 {
        return Coloring { chi: 0, colors: Vec::new(), exact: true };
    }
    let upper = dsatur(g);
    // Color high-degree vertices first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(g.neighbors(v).len()));
    for k in 1..upper.chi {
        let mut colors = vec![usize::MAX; n];
        if color_with(g, &order, 0, k, &mut colors) {
            return Coloring { chi: k, colors, exact: true };
        }
    }
    Coloring { exact: true, ..upper }
}

fn color_with(g: &DependencyGraph, order: &[usize], i: usize, k: usize, colors: &mut [usize]) -> bool {
    let Some(&v) = order.get(i) else {
        return true;
    };
    // Symmetry breaking: never open more than one new color at a time.
    let used = colors.iter().filter(|&&c| c != usize::MAX).map(|&c| c + 1).max().unwrap_or(0);
    for c in 0..k.min(used + 1) {
        if g.neighbors(v).iter().all(|&w| colors[w] != c) {
            colors[v] = c;
            if color_with(g, order, i + 1, k, colors) {
                return true;
            }
            colors[v] = usize::MAX;
        }
    }
    false
}

pub fn is_proper(g: &DependencyGraph, colors: &[usize]) -> bool {
    (0..g.node_count()).all(|v| g.neighbors(v).iter().all(|&w| colors[v] != colors[w]))
}
