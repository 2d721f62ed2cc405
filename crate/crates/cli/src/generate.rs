//! Seeded synthetic multi-graph datasets.

use std::collections::BTreeMap;

use mpnngb::dataset::LabeledGraph;
use mpnngb::rng::stream_rng;
use mpnngb::{Dataset, Graph};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::usage;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    RandomRegular { n: usize, deg: usize },
    PlantedPartition { n: usize, blocks: usize, p_in: f64, p_out: f64 },
    ErdosRenyi { n: usize, p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum FeatureRule {
    /// One-hot of `min(degree, dim − 1)`.
    OneHotDegree { dim: usize },
    /// Independent coordinates in `[lo, hi]`, redrawn when exactly zero.
    UniformBox { lo: f64, hi: f64, dim: usize },
    /// One-hot of the planted block (a single block for other kinds).
    BlockIndicator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    DegreeParity,
    /// Block index modulo 2.
    BlockMembership,
    TriangleIncidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub graph: GraphKind,
    pub count: usize,
    pub features: FeatureRule,
    pub labels: LabelRule,
    /// Half-width of a per-graph offset added to every feature of that graph.
    /// Makes graphs heterogeneous, so nodes of one graph share a bias.
    #[serde(default)]
    pub graph_shift: f64,
}

impl GeneratorSpec {
    /// Planted-partition graphs with per-graph heterogeneity, the default for
    /// the sampling-strategy experiment.
    pub fn desk_scale() -> Self {
        Self {
            graph: GraphKind::PlantedPartition { n: 24, blocks: 2, p_in: 0.4, p_out: 0.1 },
            count: 320,
            features: FeatureRule::BlockIndicator,
            labels: LabelRule::BlockMembership,
            graph_shift: 1.0,
        }
    }

    pub fn nodes_per_graph(&self) -> usize {
        match self.graph {
            GraphKind::RandomRegular { n, .. } | GraphKind::PlantedPartition { n, .. } | GraphKind::ErdosRenyi { n, .. } => n,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match (&self.features, &self.graph) {
            (FeatureRule::OneHotDegree { dim } | FeatureRule::UniformBox { dim, .. }, _) => *dim,
            (FeatureRule::BlockIndicator, GraphKind::PlantedPartition { blocks, .. }) => *blocks,
            (FeatureRule::BlockIndicator, _) => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        match self.graph {
            GraphKind::RandomRegular { n, deg } => {
                if (n * deg) % 2 == 1 || (n > 0 && deg >= n) {
                    return usage(format!("no simple {deg}-regular graph on {n} nodes"));
                }
            }
            GraphKind::PlantedPartition { n, blocks, p_in, p_out } => {
                if blocks == 0 || blocks > n.max(1) {
                    return usage(format!("{blocks} blocks for {n} nodes"));
                }
                if !prob(p_in) || !prob(p_out) {
                    return usage("edge probabilities must lie in [0, 1]");
                }
            }
            GraphKind::ErdosRenyi { p, .. } => {
                if !prob(p) {
                    return usage("edge probability must lie in [0, 1]");
                }
            }
        }
        match self.features {
            FeatureRule::OneHotDegree { dim } | FeatureRule::UniformBox { dim, .. } if dim == 0 => usage("feature dimension must be positive"),
            FeatureRule::UniformBox { lo, hi, .. } if !(lo < hi) || (lo == 0.0 && hi == 0.0) => usage("uniform box needs lo < hi"),
            _ if !(self.graph_shift >= 0.0 && self.graph_shift.is_finite()) => usage("graph shift must be finite and nonnegative"),
            _ => Ok(()),
        }
    }
}

/// Generates `spec.count` graphs `g0, g1, …`; graph `i` uses RNG stream `i`.
pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let graphs = (0..spec.count).into_par_iter().map(|i| one_graph(spec, seed, i)).collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(spec.feature_dim(), graphs)?)
}

fn one_graph(spec: &GeneratorSpec, seed: u64, i: usize) -> Result<LabeledGraph<f64>> {
    let mut rng = stream_rng(seed, i as u64);
    let (n, edges, blocks) = match spec.graph {
        GraphKind::RandomRegular { n, deg } => (n, random_regular(n, deg, &mut rng)?, vec![0; n]),
        GraphKind::PlantedPartition { n, blocks, p_in, p_out } => {
            let block: Vec<usize> = (0..n).map(|v| v % blocks).collect();
            let edges = random_edges(n, &mut rng, |u, v| if block[u] == block[v] { p_in } else { p_out });
            (n, edges, block)
        }
        GraphKind::ErdosRenyi { n, p } => (n, random_edges(n, &mut rng, |_, _| p), vec![0; n]),
    };
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let dim = spec.feature_dim();
    let mut features: Vec<Vec<f64>> = (0..n)
        .map(|v| match spec.features {
            FeatureRule::OneHotDegree { dim } => one_hot(adj[v].len().min(dim - 1), dim),
            FeatureRule::UniformBox { lo, hi, dim } => (0..dim)
                .map(|_| loop {
                    let x = rng.gen_range(lo..=hi);
                    if x != 0.0 {
                        break x;
                    }
                })
                .collect(),
            FeatureRule::BlockIndicator => one_hot(blocks[v], dim),
        })
        .collect();
    if spec.graph_shift > 0.0 {
        let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-spec.graph_shift..=spec.graph_shift)).collect();
        for f in &mut features {
            for (x, s) in f.iter_mut().zip(&shift) {
                *x += s;
            }
        }
    }
    let graph = Graph::new(format!("g{i}"), n, &edges, features)?;
    let node_labels: BTreeMap<usize, u8> = (0..n)
        .map(|v| {
            let y = match spec.labels {
                LabelRule::DegreeParity => adj[v].len() % 2,
                LabelRule::BlockMembership => blocks[v] % 2,
                LabelRule::TriangleIncidence => usize::from(in_triangle(&graph, v)),
            };
            (v, y as u8)
        })
        .collect();
    Ok(LabeledGraph { graph, node_labels, link_labels: BTreeMap::new() })
}

fn one_hot(i: usize, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

fn random_edges<R: Rng>(n: usize, rng: &mut R, p: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p(u, v)) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Configuration model with whole-graph rejection of loops and multi-edges.
fn random_regular<R: Rng>(n: usize, deg: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, deg)).collect();
    'attempt: for _ in 0..10_000 {
        stubs.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        edges.sort_unstable();
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u == v || (i > 0 && edges[i - 1] == (u, v)) {
                continue 'attempt;
            }
        }
        return Ok(edges);
    }
    usage(format!("failed to sample a simple {deg}-regular graph on {n} nodes"))
}

fn in_triangle(g: &Graph, v: usize) -> bool {
    let nb = g.neighbors(v);
    nb.iter().enumerate().any(|(i, &a)| nb[i + 1..].iter().any(|&b| g.has_edge(a, b)))
}
