//! Choosing representation targets from a dataset.

use std::str::FromStr;

use mpnngb::graph::RepresentationTarget;
use mpnngb::rng::rng_from_seed;
use mpnngb::{Dataset, Target};
use serde::{Deserialize, Serialize};

use crate::error::usage;
use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TargetSet {
    #[default]
    Nodes,
    /// Every edge `(u, v)` with `u < v`.
    Links,
}

/// All targets of the requested kind in graph order, or a seeded sample of
/// `limit` of them kept in that order.
pub fn collect_targets(ds: &Dataset, set: TargetSet, limit: Option<usize>, seed: u64) -> Vec<Target<'_>> {
    let all: Vec<Target<'_>> = match set {
        TargetSet::Nodes => ds.all_node_targets(),
        TargetSet::Links => ds
            .graphs
            .iter()
            .flat_map(|g| g.graph.edges().map(move |(u, v)| RepresentationTarget::link(&g.graph, u, v).expect("edge endpoints exist")))
            .collect(),
    };
    match limit {
        Some(k) if k < all.len() => {
            let mut idx = rand::seq::index::sample(&mut rng_from_seed(seed), all.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| all[i].clone()).collect()
        }
        _ => all,
    }
}

/// `graph:u`, `graph:u,v` or `graph:u-v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSpec {
    pub graph: String,
    pub nodes: Vec<usize>,
}

impl FromStr for TargetSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let Some((graph, nodes)) = s.rsplit_once(':') else {
            return usage(format!("target `{s}` is not of the form graph:u or graph:u,v"));
        };
        let nodes = nodes
            .split([',', '-'])
            .map(|x| x.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("bad node id `{x}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if graph.is_empty() || !(1..=2).contains(&nodes.len()) {
            return usage(format!("target `{s}` needs a graph id and one or two nodes"));
        }
        Ok(Self { graph: graph.to_owned(), nodes })
    }
}

impl TargetSpec {
    pub fn resolve<'d>(&self, ds: &'d Dataset) -> Result<Target<'d>> {
        let g = ds.graph(&self.graph).ok_or_else(|| CliError::Usage(format!("no graph `{}` in dataset", self.graph)))?;
        Ok(match self.nodes[..] {
            [u] => RepresentationTarget::node(&g.graph, u)?,
            [u, v] => RepresentationTarget::link(&g.graph, u, v)?,
            _ => unreachable!("validated when parsing"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_target_specs() {
        assert_eq!("g:1,2".parse::<TargetSpec>().unwrap(), TargetSpec { graph: "g".into(), nodes: vec![1, 2] });
        assert_eq!("a:b:0".parse::<TargetSpec>().unwrap().graph, "a:b");
        for bad in ["g", "g:", ":1", "g:1,2,3", "g:x"] {
            assert!(bad.parse::<TargetSpec>().is_err(), "{bad}");
        }
    }
}
