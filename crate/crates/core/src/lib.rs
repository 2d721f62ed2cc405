//! Generalization analysis for message-passing neural networks on node- and
//! link-level tasks.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] featured graphs, representation targets and the graph
//!   transformations (identity, SEAL-style enclosing subgraphs, pairwise
//!   conditional graphs) that turn link prediction into node-set inputs.
//! * [`unrolling`] unrolling (computation) trees, `(q, L)` padding and the
//!   pairing `rho` that equalizes two multisets of trees.
//! * [`distance`] the (weighted) unrolling distance, an exact hierarchical
//!   optimal-assignment solver plus a brute-force oracle.
//! * [`gmpnn`] sum-aggregation MPNN layers, generalized `(T, V, Psi)`-MPNNs,
//!   sub-sum pooling checks and empirical Lipschitz certification.
//! * [`covering`] epsilon-covers and covering numbers over distance matrices.
//! * [`dependency`] sample dependency graphs and chromatic numbers.
//! * [`bounds`], [`concentration`], [`stability`] numeric generalization
//!   bounds and Monte-Carlo checks of the concentration inequalities behind
//!   them.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`, which is what the CLI uses.

pub mod assignment;
pub mod bounds;
pub mod concentration;
pub mod covering;
pub mod dataset;
pub mod dependency;
pub mod distance;
pub mod error;
pub mod gmpnn;
pub mod graph;
pub mod linalg;
pub mod refinement;
pub mod rng;
pub mod scalar;
pub mod stability;
pub mod unrolling;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::FeaturedGraph<f64>;
pub type Graph32 = graph::FeaturedGraph<f32>;
pub type Target<'g> = graph::RepresentationTarget<'g, f64>;
pub type Dataset = dataset::Dataset<f64>;
pub type Tree = unrolling::UnrollingTree<f64>;
pub type Forest = unrolling::PaddedForest<f64>;
pub type DistanceParams = distance::DistanceParams<f64>;
pub type DistanceMatrix = covering::DistanceMatrix<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type MpnnLayer = gmpnn::MpnnLayer<f64>;
pub type GmpnnConfig = gmpnn::GmpnnConfig<f64>;
pub type BoundInputs = bounds::BoundInputs<f64>;
pub type BoundReport = bounds::BoundReport<f64>;
