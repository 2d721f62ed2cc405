//! Unrolling trees, `(q, L)` padding and the multiset pairing `rho`.
//!
//! Trees live in an arena with the root at index 0. Children are stored in
//! canonical order: ascending source node id, padding last.

use serde::{Deserialize, Serialize};

use crate::graph::FeaturedGraph;
use crate::graph::{feature_key, transform_select, RepresentationTarget, SelectionKind, TransformKind};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode<T> {
    pub feature: Vec<T>,
    pub children: Vec<usize>,
    pub level: usize,
    /// Originating graph node; `None` for padding.
    pub source: Option<usize>,
}

impl<T> TreeNode<T> {
    pub fn is_padding(&self) -> bool {
        self.source.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnrollingTree<T> {
    nodes: Vec<TreeNode<T>>,
    dim: usize,
}

/// Nested form used for golden files and hand-built fixtures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedTree {
    pub feature: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NestedTree>,
}

impl NestedTree {
    pub fn leaf(feature: Vec<f64>) -> Self {
        Self { feature, children: Vec::new() }
    }

    pub fn node(feature: Vec<f64>, children: Vec<NestedTree>) -> Self {
        Self { feature, children }
    }
}

impl<T: Scalar> UnrollingTree<T> {
    pub const ROOT: usize = 0;

    /// Single root node.
    pub fn singleton(feature: Vec<T>, source: Option<usize>) -> Self {
        let dim = feature.len();
        Self { nodes: vec![TreeNode { feature, children: Vec::new(), level: 0, source }], dim }
    }

    /// Builds a tree from its nested form. Nonzero nodes get consecutive
    /// pseudo source ids; all-zero nodes are treated as padding.
    pub fn from_nested(nested: &NestedTree) -> Self {
        let dim = nested.feature.len();
        let mut tree = Self { nodes: Vec::new(), dim };
        let mut next_source = 0;
        tree.push_nested(nested, 0, &mut next_source);
        tree
    }

    fn push_nested(&mut self, nested: &NestedTree, level: usize, next_source: &mut usize) -> usize {
        let idx = self.nodes.len();
        let zero = nested.feature.iter().all(|&x| x == 0.0);
        let source = (!zero).then(|| {
            *next_source += 1;
            *next_source - 1
        });
        self.nodes.push(TreeNode { feature: nested.feature.iter().map(|&x| T::lit(x)).collect(), children: Vec::new(), level, source });
        for child in &nested.children {
            let c = self.push_nested(child, level + 1, next_source);
            self.nodes[idx].children.push(c);
        }
        idx
    }

    pub fn to_nested(&self) -> NestedTree {
        self.nested_at(Self::ROOT)
    }

    fn nested_at(&self, i: usize) -> NestedTree {
        let n = &self.nodes[i];
        NestedTree { feature: n.feature.iter().map(|x| x.to_f64_lossy()).collect(), children: n.children.iter().map(|&c| self.nested_at(c)).collect() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_nested()).expect("trees serialize")
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode<T> {
        &self.nodes[i]
    }

    pub fn root(&self) -> &TreeNode<T> {
        &self.nodes[Self::ROOT]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn max_out_degree(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).max().unwrap_or(0)
    }

    /// Every non-leaf has exactly `q` children and every leaf sits at level `depth`.
    pub fn is_complete(&self, q: usize, depth: usize) -> bool {
        self.nodes.iter().all(|n| if n.level < depth && q > 0 { n.children.len() == q } else { n.children.is_empty() })
    }

    /// Completes the tree to a `q`-ary tree of depth `depth`, adding zero-feature
    /// padding children level by level. Existing nodes are untouched.
    pub fn pad(&self, q: usize, depth: usize) -> Result<Self> {
        if q < self.max_out_degree() {
            return Err(Error::InvalidParameter(format!("arity {q} below max out-degree {}", self.max_out_degree())));
        }
        if depth < self.depth() {
            return Err(Error::InvalidParameter(format!("depth {depth} below tree depth {}", self.depth())));
        }
        let mut out = self.clone();
        // Nodes are appended behind the cursor, so a single sweep handles every level.
        let mut i = 0;
        while i < out.nodes.len() {
            let level = out.nodes[i].level;
            if level < depth {
                while out.nodes[i].children.len() < q {
                    let c = out.nodes.len();
                    out.nodes.push(TreeNode { feature: vec![T::zero(); self.dim], children: Vec::new(), level: level + 1, source: None });
                    out.nodes[i].children.push(c);
                }
            }
            i += 1;
        }
        Ok(out)
    }

    /// A complete `q`-ary depth-`depth` tree whose nodes are all padding.
    pub fn zero_tree(dim: usize, q: usize, depth: usize) -> Self {
        let base = Self { nodes: vec![TreeNode { feature: vec![T::zero(); dim], children: Vec::new(), level: 0, source: None }], dim };
        base.pad(q, depth).expect("a single node pads to any shape")
    }

    /// Canonical encoding up to feature-respecting isomorphism of rooted trees.
    pub fn canonical_form(&self) -> String {
        self.canonical_at(Self::ROOT)
    }

    fn canonical_at(&self, i: usize) -> String {
        let n = &self.nodes[i];
        let mut kids: Vec<String> = n.children.iter().map(|&c| self.canonical_at(c)).collect();
        kids.sort();
        let key: Vec<String> = feature_key(&n.feature).iter().map(|b| format!("{b:x}")).collect();
        format!("[{}|{}]", key.join(","), kids.concat())
    }

    pub fn is_isomorphic(&self, other: &Self) -> bool {
        self.canonical_form() == other.canonical_form()
    }
}

/// Node count of a complete `q`-ary tree of depth `depth`.
pub fn complete_tree_size(q: usize, depth: usize) -> usize {
    match q {
        0 => 1,
        1 => depth + 1,
        _ => (q.pow(depth as u32 + 1) - 1) / (q - 1),
    }
}

/// Depth-`depth` unrolling tree of `node`; one child subtree per neighbor, in
/// ascending neighbor order.
pub fn unroll<T: Scalar>(graph: &FeaturedGraph<T>, node: usize, depth: usize) -> Result<UnrollingTree<T>> {
    graph.check_node(node)?;
    let mut tree = UnrollingTree { nodes: Vec::new(), dim: graph.dim() };
    unroll_into(graph, node, 0, depth, &mut tree.nodes);
    Ok(tree)
}

fn unroll_into<T: Scalar>(graph: &FeaturedGraph<T>, v: usize, level: usize, depth: usize, nodes: &mut Vec<TreeNode<T>>) -> usize {
    let idx = nodes.len();
    nodes.push(TreeNode { feature: graph.feature(v).to_vec(), children: Vec::new(), level, source: Some(v) });
    if level < depth {
        for &u in graph.neighbors(v) {
            let c = unroll_into(graph, u, level + 1, depth, nodes);
            nodes[idx].children.push(c);
        }
    }
    idx
}

/// The multiset `{{ unr(T(G), u, L) | u ∈ V(G, S) }}` as a list.
pub fn forest_of<T: Scalar>(
    target: &RepresentationTarget<'_, T>,
    transform: TransformKind,
    selection: SelectionKind,
    depth: usize,
) -> Result<Vec<UnrollingTree<T>>> {
    let t = transform_select(target, transform, selection)?;
    t.selected.iter().map(|&u| unroll(&t.graph, u, depth)).collect()
}

/// Multiset of structurally identical complete `arity`-ary trees of depth `depth`.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedForest<T> {
    pub trees: Vec<UnrollingTree<T>>,
    pub arity: usize,
    pub depth: usize,
}

impl<T: Scalar> PaddedForest<T> {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn total_nodes(&self) -> usize {
        self.trees.iter().map(UnrollingTree::node_count).sum()
    }

    pub fn check_invariants(&self) -> Result<()> {
        for t in &self.trees {
            if !t.is_complete(self.arity, self.depth) {
                return Err(Error::InvalidParameter("forest contains an incomplete tree".into()));
            }
            if t.nodes.iter().any(|n| n.is_padding() && n.feature.iter().any(|x| *x != T::zero())) {
                return Err(Error::InvalidParameter("padding node with nonzero feature".into()));
            }
        }
        Ok(())
    }
}

/// Pads both multisets to a shared `(q, L)` shape and augments the smaller one
/// with all-zero trees. `q` is the maximum out-degree and `L` the maximum depth
/// over both inputs.
pub fn rho<T: Scalar>(f1: &[UnrollingTree<T>], f2: &[UnrollingTree<T>]) -> Result<(PaddedForest<T>, PaddedForest<T>)> {
    if f1.is_empty() && f2.is_empty() {
        return Err(Error::EmptyForests);
    }
    let all = || f1.iter().chain(f2);
    let dim = all().next().map(UnrollingTree::dim).unwrap_or(0);
    if let Some(bad) = all().find(|t| t.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.dim() });
    }
    let q = all().map(UnrollingTree::max_out_degree).max().unwrap_or(0);
    let depth = all().map(UnrollingTree::depth).max().unwrap_or(0);
    let m = f1.len().max(f2.len());
    let complete = |f: &[UnrollingTree<T>]| -> Result<PaddedForest<T>> {
        let mut trees = f.iter().map(|t| t.pad(q, depth)).collect::<Result<Vec<_>>>()?;
        trees.resize_with(m, || UnrollingTree::zero_tree(dim, q, depth));
        Ok(PaddedForest { trees, arity: q, depth })
    };
    Ok((complete(f1)?, complete(f2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::FeaturedGraph;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FeaturedGraph<f64> {
        let feats = (0..n).map(|i| vec![i as f64 + 1.0]).collect();
        FeaturedGraph::new("g", n, edges, feats).unwrap()
    }

    #[test]
    fn isolated_node_unrolls_to_singleton() {
        let g = graph(1, &[]);
        let t = unroll(&g, 0, 2).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn triangle_depth_one() {
        let g = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let t = unroll(&g, 0, 1).unwrap();
        let srcs: Vec<_> = t.root().children.iter().map(|&c| t.node(c).source).collect();
        assert_eq!(srcs, vec![Some(1), Some(2)]);
    }

    #[test]
    fn path_middle_depth_two() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let t = unroll(&g, 1, 2).unwrap();
        let expected = NestedTree::node(
            vec![2.0],
            vec![NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![2.0])]), NestedTree::node(vec![3.0], vec![NestedTree::leaf(vec![2.0])])],
        );
        assert_eq!(t.to_nested(), expected);
        assert_eq!(
            t.to_json(),
            r#"{"feature":[2.0],"children":[{"feature":[1.0],"children":[{"feature":[2.0]}]},{"feature":[3.0],"children":[{"feature":[2.0]}]}]}"#
        );
    }

    #[test]
    fn pad_root_with_one_child() {
        let t: UnrollingTree<f64> = UnrollingTree::from_nested(&NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![2.0])]));
        let p = t.pad(2, 2).unwrap();
        assert_eq!(p.node_count(), 7);
        assert_eq!(p.nodes().iter().filter(|n| n.is_padding()).count(), 5);
        assert!(p.is_complete(2, 2));
        assert_eq!(p.node(0).feature, vec![1.0]);
        assert_eq!(p.pad(2, 2).unwrap(), p);
    }

    #[test]
    fn pad_single_node_to_path() {
        let t = UnrollingTree::singleton(vec![3.0f64], Some(0));
        let p = t.pad(1, 1).unwrap();
        assert_eq!(p.node_count(), 2);
        assert!(p.node(1).is_padding());
        assert_eq!(p.node(1).feature, vec![0.0]);
    }

    #[test]
    fn pad_rejects_small_shapes() {
        let g = graph(3, &[(0, 1), (0, 2)]);
        let t = unroll(&g, 0, 2).unwrap();
        assert!(t.pad(1, 2).is_err());
        assert!(t.pad(2, 1).is_err());
    }

    #[test]
    fn complete_sizes() {
        assert_eq!(complete_tree_size(2, 2), 7);
        assert_eq!(complete_tree_size(1, 3), 4);
        assert_eq!(complete_tree_size(3, 1), 4);
        assert_eq!(UnrollingTree::<f64>::zero_tree(2, 3, 2).node_count(), complete_tree_size(3, 2));
    }

    #[test]
    fn rho_on_singletons() {
        let a = vec![UnrollingTree::singleton(vec![1.0f64], Some(0))];
        let b = vec![UnrollingTree::singleton(vec![2.0f64], Some(0))];
        let (m1, m2) = rho(&a, &b).unwrap();
        assert_eq!((m1.len(), m2.len()), (1, 1));
        assert_eq!((m1.arity, m1.depth), (0, 0));
        assert_eq!(m1.trees[0].node_count(), 1);
    }

    #[test]
    fn rho_identical_lists() {
        let g = graph(4, &[(0, 1), (1, 2), (1, 3)]);
        let f: Vec<_> = (0..4).map(|v| unroll(&g, v, 2).unwrap()).collect();
        let (m1, m2) = rho(&f, &f).unwrap();
        assert_eq!(m1, m2);
        m1.check_invariants().unwrap();
    }

    #[test]
    fn rho_rejects_two_empty_lists() {
        assert!(matches!(rho::<f64>(&[], &[]), Err(Error::EmptyForests)));
    }

    #[test]
    fn canonical_form_ignores_child_order() {
        let a = NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![2.0]), NestedTree::leaf(vec![3.0])]);
        let b = NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![3.0]), NestedTree::leaf(vec![2.0])]);
        let c = NestedTree::node(vec![1.0], vec![NestedTree::leaf(vec![3.0]), NestedTree::leaf(vec![3.0])]);
        let (a, b, c) = (UnrollingTree::<f64>::from_nested(&a), UnrollingTree::from_nested(&b), UnrollingTree::from_nested(&c));
        assert!(a.is_isomorphic(&b));
        assert!(!a.is_isomorphic(&c));
    }
}
