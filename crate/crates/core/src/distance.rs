//! The (weighted) unrolling distance.
//!
//! The solver never materializes padded trees. Two subtrees rooted at the same
//! level cost `ω(l)·‖a − a'‖₂` plus an optimal assignment of their children;
//! a missing child stands for an all-zero padding subtree, whose cost against
//! any subtree `t` is the weighted norm mass of `t`. Padding only to
//! `max(c₁, c₂)` children instead of the full arity is exact: pairing two real
//! subtrees with padding on both sides never beats pairing them together, by
//! the triangle inequality.

use std::collections::HashMap;
use std::hash::Hash;
use std::str::FromStr;

use rayon::prelude::*;

use crate::assignment;
use crate::covering::DistanceMatrix;
use crate::graph::{transform_select, FeaturedGraph, RepresentationTarget, SelectionKind, TransformKind};
use crate::linalg::{dist2, norm2};
use crate::unrolling::{forest_of, rho, PaddedForest, UnrollingTree};
use crate::{Error, Result, Scalar};

/// Default node budget for [`ud_oracle`].
pub const ORACLE_GUARD: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Weighting {
    Flat,
    Binomial,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Self::Flat),
            "binomial" => Ok(Self::Binomial),
            _ => Err(Error::InvalidParameter(format!("unknown weighting `{s}` (flat|binomial)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceParams<T> {
    pub depth: usize,
    pub transform: TransformKind,
    pub selection: SelectionKind,
    /// Per-level weights `ω(0..=depth)`.
    pub weights: Vec<T>,
}

impl<T: Scalar> DistanceParams<T> {
    pub fn new(depth: usize, transform: TransformKind, weighting: Weighting) -> Self {
        let weights = match weighting {
            Weighting::Flat => vec![T::one(); depth + 1],
            Weighting::Binomial => (0..=depth).map(|l| T::lit(binomial(depth, l))).collect(),
        };
        Self { depth, transform, selection: SelectionKind::Native, weights }
    }

    pub fn flat(depth: usize, transform: TransformKind) -> Self {
        Self::new(depth, transform, Weighting::Flat)
    }

    pub fn binomial(depth: usize, transform: TransformKind) -> Self {
        Self::new(depth, transform, Weighting::Binomial)
    }

    pub fn with_selection(mut self, selection: SelectionKind) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_weights(mut self, weights: Vec<T>) -> Self {
        self.weights = weights;
        self
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { weights: self.weights.iter().map(|&w| w * c).collect(), ..self.clone() }
    }

    pub fn is_binomial(&self) -> bool {
        self.weights.len() == self.depth + 1 && self.weights.iter().enumerate().all(|(l, &w)| w == T::lit(binomial(self.depth, l)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != self.depth + 1 {
            return Err(Error::InvalidParameter(format!("expected {} weights, got {}", self.depth + 1, self.weights.len())));
        }
        if self.weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Read access to a family of rooted trees whose nodes carry a level.
pub trait TreeView<T> {
    type Node: Copy + Eq + Hash;
    fn feature(&self, n: Self::Node) -> &[T];
    fn children(&self, n: Self::Node) -> Vec<Self::Node>;
    fn level(&self, n: Self::Node) -> usize;
}

/// Unrolling trees of a graph, read lazily: node `(v, l)` is graph node `v`
/// at level `l`, with one child per neighbor while `l < depth`.
pub struct GraphView<'a, T> {
    pub graph: &'a FeaturedGraph<T>,
    pub depth: usize,
}

impl<T: Scalar> TreeView<T> for GraphView<'_, T> {
    type Node = (usize, usize);

    fn feature(&self, (v, _): Self::Node) -> &[T] {
        self.graph.feature(v)
    }

    fn children(&self, (v, l): Self::Node) -> Vec<Self::Node> {
        if l < self.depth {
            self.graph.neighbors(v).iter().map(|&u| (u, l + 1)).collect()
        } else {
            Vec::new()
        }
    }

    fn level(&self, (_, l): Self::Node) -> usize {
        l
    }
}

/// Explicit trees; node `(t, i)` is arena node `i` of tree `t`.
pub struct ForestView<'a, T> {
    pub trees: &'a [UnrollingTree<T>],
}

impl<T: Scalar> TreeView<T> for ForestView<'_, T> {
    type Node = (usize, usize);

    fn feature(&self, (t, i): Self::Node) -> &[T] {
        &self.trees[t].node(i).feature
    }

    fn children(&self, (t, i): Self::Node) -> Vec<Self::Node> {
        self.trees[t].node(i).children.iter().map(|&c| (t, c)).collect()
    }

    fn level(&self, (t, i): Self::Node) -> usize {
        self.trees[t].node(i).level
    }
}

struct Solver<'a, T, A: TreeView<T>, B: TreeView<T>> {
    a: &'a A,
    b: &'a B,
    weights: &'a [T],
    memo: HashMap<(A::Node, B::Node), T>,
    mass_a: HashMap<A::Node, T>,
    mass_b: HashMap<B::Node, T>,
}

fn mass<T: Scalar, V: TreeView<T>>(view: &V, weights: &[T], memo: &mut HashMap<V::Node, T>, n: V::Node) -> T {
    if let Some(&m) = memo.get(&n) {
        return m;
    }
    let own = weights[view.level(n)] * norm2(view.feature(n));
    let m = own + view.children(n).into_iter().map(|c| mass(view, weights, memo, c)).sum::<T>();
    memo.insert(n, m);
    m
}

impl<'a, T: Scalar, A: TreeView<T>, B: TreeView<T>> Solver<'a, T, A, B> {
    fn new(a: &'a A, b: &'a B, weights: &'a [T]) -> Self {
        Self { a, b, weights, memo: HashMap::new(), mass_a: HashMap::new(), mass_b: HashMap::new() }
    }

    fn mass_a(&mut self, n: A::Node) -> T {
        mass(self.a, self.weights, &mut self.mass_a, n)
    }

    fn mass_b(&mut self, n: B::Node) -> T {
        mass(self.b, self.weights, &mut self.mass_b, n)
    }

    fn cost(&mut self, x: A::Node, y: B::Node) -> T {
        if let Some(&c) = self.memo.get(&(x, y)) {
            return c;
        }
        let l = self.a.level(x);
        debug_assert_eq!(l, self.b.level(y));
        let own = self.weights[l] * dist2(self.a.feature(x), self.b.feature(y));
        let cx = self.a.children(x);
        let cy = self.b.children(y);
        let c = own + self.match_lists(&cx, &cy);
        self.memo.insert((x, y), c);
        c
    }

    /// Optimal matching of two node lists, padded with zero subtrees.
    fn match_lists(&mut self, xs: &[A::Node], ys: &[B::Node]) -> T {
        let k = xs.len().max(ys.len());
        if k == 0 {
            return T::zero();
        }
        let mut m = vec![vec![T::zero(); k]; k];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = match (xs.get(i), ys.get(j)) {
                    (Some(&x), Some(&y)) => self.cost(x, y),
                    (Some(&x), None) => self.mass_a(x),
                    (None, Some(&y)) => self.mass_b(y),
                    (None, None) => T::zero(),
                };
            }
        }
        assignment::min_cost(&m)
    }
}

/// Distance between two forests given as root lists of arbitrary views.
pub fn forest_distance<T: Scalar, A: TreeView<T>, B: TreeView<T>>(a: &A, roots_a: &[A::Node], b: &B, roots_b: &[B::Node], weights: &[T]) -> Result<T> {
    // Nothing to match: e.g. pairwise selections conditioned on isolated nodes.
    if roots_a.is_empty() && roots_b.is_empty() {
        return Ok(T::zero());
    }
    if roots_a.iter().map(|&r| a.level(r)).chain(roots_b.iter().map(|&r| b.level(r))).any(|l| l != 0) {
        return Err(Error::InvalidParameter("forest roots must sit at level 0".into()));
    }
    Ok(Solver::new(a, b, weights).match_lists(roots_a, roots_b))
}

/// Distance between two explicit lists of (unpadded) trees.
pub fn tree_list_distance<T: Scalar>(f1: &[UnrollingTree<T>], f2: &[UnrollingTree<T>], weights: &[T]) -> Result<T> {
    check_explicit(f1, f2, weights)?;
    let (a, b) = (ForestView { trees: f1 }, ForestView { trees: f2 });
    let ra: Vec<_> = (0..f1.len()).map(|t| (t, UnrollingTree::<T>::ROOT)).collect();
    let rb: Vec<_> = (0..f2.len()).map(|t| (t, UnrollingTree::<T>::ROOT)).collect();
    forest_distance(&a, &ra, &b, &rb, weights)
}

fn check_explicit<T: Scalar>(f1: &[UnrollingTree<T>], f2: &[UnrollingTree<T>], weights: &[T]) -> Result<()> {
    let mut dims = f1.iter().chain(f2).map(UnrollingTree::dim);
    if let Some(d) = dims.next() {
        if let Some(bad) = dims.find(|&e| e != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad });
        }
    }
    let depth = f1.iter().chain(f2).map(UnrollingTree::depth).max().unwrap_or(0);
    if depth >= weights.len() {
        return Err(Error::InvalidParameter(format!("trees of depth {depth} need {} weights", depth + 1)));
    }
    Ok(())
}

fn check_targets<T: Scalar>(x: &RepresentationTarget<'_, T>, y: &RepresentationTarget<'_, T>, params: &DistanceParams<T>) -> Result<()> {
    params.validate()?;
    x.validate()?;
    y.validate()?;
    if x.graph.dim() != y.graph.dim() {
        return Err(Error::DimensionMismatch { expected: x.graph.dim(), got: y.graph.dim() });
    }
    Ok(())
}

/// Unrolling distance between two representation targets.
pub fn ud<T: Scalar>(x: &RepresentationTarget<'_, T>, y: &RepresentationTarget<'_, T>, params: &DistanceParams<T>) -> Result<T> {
    check_targets(x, y, params)?;
    // Fixed argument order makes the value bitwise symmetric.
    let (x, y) = if (x.graph.id(), &x.subset) <= (y.graph.id(), &y.subset) { (x, y) } else { (y, x) };
    let tx = transform_select(x, params.transform, params.selection)?;
    let ty = transform_select(y, params.transform, params.selection)?;
    let a = GraphView { graph: &tx.graph, depth: params.depth };
    let b = GraphView { graph: &ty.graph, depth: params.depth };
    let ra: Vec<_> = tx.selected.iter().map(|&v| (v, 0)).collect();
    let rb: Vec<_> = ty.selected.iter().map(|&v| (v, 0)).collect();
    forest_distance(&a, &ra, &b, &rb, &params.weights)
}

/// Exhaustive minimum over all edge-preserving bijections of the padded
/// forests. Refuses inputs whose padded forests exceed `guard` nodes each.
pub fn ud_oracle<T: Scalar>(x: &RepresentationTarget<'_, T>, y: &RepresentationTarget<'_, T>, params: &DistanceParams<T>, guard: usize) -> Result<T> {
    check_targets(x, y, params)?;
    let f1 = forest_of(x, params.transform, params.selection, params.depth)?;
    let f2 = forest_of(y, params.transform, params.selection, params.depth)?;
    tree_list_oracle(&f1, &f2, &params.weights, guard)
}

/// [`ud_oracle`] on explicit tree lists.
pub fn tree_list_oracle<T: Scalar>(f1: &[UnrollingTree<T>], f2: &[UnrollingTree<T>], weights: &[T], guard: usize) -> Result<T> {
    check_explicit(f1, f2, weights)?;
    if f1.is_empty() && f2.is_empty() {
        return Ok(T::zero());
    }
    let (p1, p2) = rho(f1, f2)?;
    let size = p1.total_nodes().max(p2.total_nodes());
    if size > guard {
        return Err(Error::GuardExceeded { size, limit: guard });
    }
    Ok(padded_oracle(&p1, &p2, weights))
}

/// Backtracking over bijections `V(F1) → V(F2)` that map roots to roots and
/// children of `x` to children of `φ(x)`, pruned by the best value so far.
pub fn padded_oracle<T: Scalar>(p1: &PaddedForest<T>, p2: &PaddedForest<T>, weights: &[T]) -> T {
    let flat = |p: &PaddedForest<T>| {
        let mut nodes = Vec::new();
        for (t, tree) in p.trees.iter().enumerate() {
            let base = nodes.len();
            for n in tree.nodes() {
                nodes.push(Flat { feature: n.feature.clone(), level: n.level, parent: None, tree: t });
            }
            for (i, n) in tree.nodes().iter().enumerate() {
                for &c in &n.children {
                    nodes[base + c].parent = Some(base + i);
                }
            }
        }
        // Parents before children.
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by_key(|&i| nodes[i].level);
        (nodes, order)
    };
    let (n1, order) = flat(p1);
    let (n2, _) = flat(p2);
    let mut st = Search { n1: &n1, n2: &n2, order: &order, weights, phi: vec![usize::MAX; n1.len()], used: vec![false; n2.len()], best: T::infinity() };
    st.go(0, T::zero());
    st.best
}

struct Flat<T> {
    feature: Vec<T>,
    level: usize,
    parent: Option<usize>,
    #[allow(dead_code)]
    tree: usize,
}

struct Search<'a, T> {
    n1: &'a [Flat<T>],
    n2: &'a [Flat<T>],
    order: &'a [usize],
    weights: &'a [T],
    phi: Vec<usize>,
    used: Vec<bool>,
    best: T,
}

impl<T: Scalar> Search<'_, T> {
    fn go(&mut self, k: usize, acc: T) {
        if acc >= self.best {
            return;
        }
        if k == self.order.len() {
            self.best = acc;
            return;
        }
        let x = self.order[k];
        let fx = &self.n1[x];
        for y in 0..self.n2.len() {
            if self.used[y] {
                continue;
            }
            let fy = &self.n2[y];
            let ok = match (fx.parent, fy.parent) {
                (None, None) => true,
                (Some(px), Some(py)) => self.phi[px] == py,
                _ => false,
            };
            if !ok {
                continue;
            }
            let c = self.weights[fx.level] * dist2(&fx.feature, &fy.feature);
            self.used[y] = true;
            self.phi[x] = y;
            self.go(k + 1, acc + c);
            self.used[y] = false;
            self.phi[x] = usize::MAX;
        }
    }
}

/// `ud` over all pairs; symmetric with a zero diagonal.
pub fn pairwise_matrix<T: Scalar>(targets: &[RepresentationTarget<'_, T>], params: &DistanceParams<T>, parallel: bool) -> Result<DistanceMatrix<T>> {
    let n = targets.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let compute = |&(i, j): &(usize, usize)| ud(&targets[i], &targets[j], params);
    let values: Vec<T> = if parallel { pairs.par_iter().map(compute).collect::<Result<_>>()? } else { pairs.iter().map(compute).collect::<Result<_>>()? };
    let mut m = vec![vec![T::zero(); n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&values) {
        m[i][j] = d;
        m[j][i] = d;
    }
    DistanceMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unrolling::NestedTree;

    fn g(n: usize, edges: &[(usize, usize)], feats: &[f64]) -> FeaturedGraph<f64> {
        FeaturedGraph::new("g", n, edges, feats.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(3, 0), 1.0);
        assert_eq!(binomial(2, 3), 0.0);
        let p = DistanceParams::<f64>::binomial(3, TransformKind::Identity);
        assert_eq!(p.weights, vec![1.0, 3.0, 3.0, 1.0]);
        assert!(p.is_binomial());
    }

    #[test]
    fn isolated_nodes() {
        let a = FeaturedGraph::new("a", 1, &[], vec![vec![1.0, 2.0]]).unwrap();
        let b = FeaturedGraph::new("b", 1, &[], vec![vec![4.0, 6.0]]).unwrap();
        let p = DistanceParams::flat(0, TransformKind::Identity);
        let d = ud(&RepresentationTarget::node(&a, 0).unwrap(), &RepresentationTarget::node(&b, 0).unwrap(), &p).unwrap();
        assert_eq!(d, 5.0);
    }

    #[test]
    fn missing_child_costs_its_mass() {
        // Root 1 with child 2 versus a bare root 1: the child meets padding.
        let t1 = UnrollingTree::<f64>::from_nested(&NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![2.0])]));
        let t2 = UnrollingTree::<f64>::from_nested(&NestedTree::leaf(vec![1.0]));
        let d = tree_list_distance(std::slice::from_ref(&t1), std::slice::from_ref(&t2), &[1.0, 3.0]).unwrap();
        assert_eq!(d, 6.0);
        assert_eq!(tree_list_oracle(&[t1], &[t2], &[1.0, 3.0], 16).unwrap(), 6.0);
    }

    #[test]
    fn extra_tree_meets_zero_tree() {
        let t = |x: f64| UnrollingTree::<f64>::from_nested(&NestedTree::leaf(vec![x]));
        let d = tree_list_distance(&[t(1.0), t(-2.0)], &[t(1.0)], &[1.0]).unwrap();
        assert_eq!(d, 2.0);
    }

    #[test]
    fn path_endpoints_are_equivalent() {
        let p3 = g(3, &[(0, 1), (1, 2)], &[1.0, 1.0, 1.0]);
        let p = DistanceParams::binomial(2, TransformKind::Identity);
        let d = ud(&RepresentationTarget::node(&p3, 0).unwrap(), &RepresentationTarget::node(&p3, 2).unwrap(), &p).unwrap();
        assert_eq!(d, 0.0);
        let d = ud(&RepresentationTarget::node(&p3, 0).unwrap(), &RepresentationTarget::node(&p3, 1).unwrap(), &p).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn reversed_link_is_zero_apart() {
        let k2 = g(2, &[(0, 1)], &[1.0, 5.0]);
        let p = DistanceParams::flat(1, TransformKind::Identity);
        let d = ud(&RepresentationTarget::link(&k2, 0, 1).unwrap(), &RepresentationTarget::link(&k2, 1, 0).unwrap(), &p).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn dimension_mismatch_and_empty() {
        let a = FeaturedGraph::new("a", 1, &[], vec![vec![1.0]]).unwrap();
        let b = FeaturedGraph::new("b", 1, &[], vec![vec![1.0, 0.0]]).unwrap();
        let p = DistanceParams::flat(1, TransformKind::Identity);
        let r = ud(&RepresentationTarget::node(&a, 0).unwrap(), &RepresentationTarget::node(&b, 0).unwrap(), &p);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        assert_eq!(tree_list_distance::<f64>(&[], &[], &[1.0]).unwrap(), 0.0);
        assert_eq!(tree_list_oracle::<f64>(&[], &[], &[1.0], ORACLE_GUARD).unwrap(), 0.0);
    }

    #[test]
    fn oracle_guard() {
        let k3 = g(3, &[(0, 1), (1, 2), (0, 2)], &[1.0, 2.0, 3.0]);
        let p = DistanceParams::flat(3, TransformKind::Identity);
        let x = RepresentationTarget::node(&k3, 0).unwrap();
        assert_eq!(ud_oracle(&x, &x, &p, ORACLE_GUARD).unwrap(), 0.0);
        assert!(matches!(ud_oracle(&x, &x, &p, 10), Err(Error::GuardExceeded { size: 15, limit: 10 })));
    }

    #[test]
    fn rejects_bad_weights() {
        let p = DistanceParams::<f64>::flat(2, TransformKind::Identity).with_weights(vec![1.0, -1.0, 1.0]);
        assert!(p.validate().is_err());
        let p = DistanceParams::<f64>::flat(2, TransformKind::Identity).with_weights(vec![1.0]);
        assert!(p.validate().is_err());
    }
}
