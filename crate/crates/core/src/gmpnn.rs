//! Sum-aggregation MPNN layers and generalized `(T, V, Ψ)`-MPNNs.

use std::collections::HashMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::distance::{ud, DistanceParams};
use crate::graph::{transform_select, FeaturedGraph, RepresentationTarget, SelectionKind, TargetKind, TransformKind};
use crate::linalg::{add_assign, dist2, hadamard, norm_inf, Matrix};
use crate::rng::stream_rng;
use crate::{Error, Result, Scalar};

/// Relative tolerance used when estimating spectral norms.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Self::Relu => x.max(T::zero()),
            Self::Identity => x,
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Self::Relu),
            "identity" | "id" => Ok(Self::Identity),
            _ => Err(Error::InvalidParameter(format!("unknown activation `{s}` (relu|identity)"))),
        }
    }
}

/// `h_v ← φ(W1ᵀ h_v + W2ᵀ Σ_{u∈N(v)} h_u)` with `W1, W2 ∈ ℝ^{d_in × d_out}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpnnLayer<T> {
    pub w1: Matrix<T>,
    pub w2: Matrix<T>,
    pub activation: Activation,
    /// Declared bound `B` on both spectral norms.
    pub norm_bound: T,
}

impl<T: Scalar> MpnnLayer<T> {
    pub fn new(w1: Matrix<T>, w2: Matrix<T>, activation: Activation, norm_bound: T) -> Result<Self> {
        if (w1.rows(), w1.cols()) != (w2.rows(), w2.cols()) {
            return Err(Error::InvalidParameter("W1 and W2 must share a shape".into()));
        }
        if !(norm_bound > T::zero()) {
            return Err(Error::InvalidParameter("norm bound must be positive".into()));
        }
        Ok(Self { w1, w2, activation, norm_bound })
    }

    /// Entries uniform in `(−a, a)`, each matrix rescaled to spectral norm `B`.
    pub fn random<R: rand::Rng + ?Sized>(d_in: usize, d_out: usize, activation: Activation, norm_bound: T, a: f64, rng: &mut R) -> Self {
        let mut draw = || {
            let mut w = Matrix::random_uniform(d_in, d_out, a, rng);
            let s = w.spectral_norm(NORM_TOL);
            if s > T::zero() {
                w.scale(norm_bound / s);
            }
            w
        };
        let w1 = draw();
        let w2 = draw();
        Self { w1, w2, activation, norm_bound }
    }

    /// Both weight matrices zero; every output is `φ(0) = 0`.
    pub fn zeros(d_in: usize, d_out: usize, activation: Activation) -> Self {
        Self { w1: Matrix::zeros(d_in, d_out), w2: Matrix::zeros(d_in, d_out), activation, norm_bound: T::one() }
    }

    pub fn in_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn spectral_norms(&self) -> (T, T) {
        (self.w1.spectral_norm(NORM_TOL), self.w2.spectral_norm(NORM_TOL))
    }

    /// Whether both estimated spectral norms stay within `B·(1 + rel_tol)`.
    pub fn respects_bound(&self, rel_tol: f64) -> bool {
        let (a, b) = self.spectral_norms();
        let lim = self.norm_bound * (T::one() + T::lit(rel_tol));
        a <= lim && b <= lim
    }
}

/// One synchronous round of message passing.
pub fn layer_forward<T: Scalar>(graph: &FeaturedGraph<T>, h: &[Vec<T>], layer: &MpnnLayer<T>) -> Result<Vec<Vec<T>>> {
    if h.len() != graph.node_count() {
        return Err(Error::InvalidParameter(format!("{} feature rows for {} nodes", h.len(), graph.node_count())));
    }
    if let Some(bad) = h.iter().find(|x| x.len() != layer.in_dim()) {
        return Err(Error::DimensionMismatch { expected: layer.in_dim(), got: bad.len() });
    }
    Ok((0..graph.node_count())
        .map(|v| {
            let mut agg = vec![T::zero(); layer.in_dim()];
            for &u in graph.neighbors(v) {
                add_assign(&mut agg, &h[u]);
            }
            let mut out = layer.w1.tr_mul_vec(&h[v]);
            add_assign(&mut out, &layer.w2.tr_mul_vec(&agg));
            out.into_iter().map(|x| layer.activation.apply(x)).collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pooling {
    Sum,
    Hadamard,
    Concat,
    /// `(h_u ⊙ h_v) ‖ Σ_{x ∈ N^k(u) ∩ N^k(v)} h_x`.
    NcnPair {
        k: usize,
    },
}

impl Pooling {
    pub fn output_dim(self, d: usize) -> usize {
        match self {
            Self::Sum | Self::Hadamard => d,
            Self::Concat | Self::NcnPair { .. } => 2 * d,
        }
    }

    /// Selection the pooling reads from.
    pub fn selection(self) -> SelectionKind {
        match self {
            Self::NcnPair { k } => SelectionKind::CommonNeighbors { hops: k },
            _ => SelectionKind::Native,
        }
    }

    /// Sub-sum constant for embeddings bounded by `b` in the max norm.
    /// For the Hadamard product the tight constant is `b`; `√(2b)` alone only
    /// dominates it for `b ≤ 2`, so the larger of the two is used.
    pub fn subsum_constant(self, b: f64) -> f64 {
        let had = (2.0 * b).sqrt().max(b);
        match self {
            Self::Sum | Self::Concat => 1.0,
            Self::Hadamard => had,
            Self::NcnPair { .. } => had.max(1.0) + 1.0,
        }
    }

    fn name(self) -> String {
        match self {
            Self::Sum => "sum".into(),
            Self::Hadamard => "hadamard".into(),
            Self::Concat => "concat".into(),
            Self::NcnPair { k } => format!("ncn:{k}"),
        }
    }
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(Self::Sum),
            "hadamard" => Ok(Self::Hadamard),
            "concat" => Ok(Self::Concat),
            "ncn" => Ok(Self::NcnPair { k: 1 }),
            _ => match s.strip_prefix("ncn:").map(str::parse) {
                Some(Ok(k)) => Ok(Self::NcnPair { k }),
                _ => Err(Error::InvalidParameter(format!("unknown pooling `{s}` (sum|hadamard|concat|ncn[:k])"))),
            },
        }
    }
}

impl std::fmt::Display for Pooling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// Feature width after a transformation of a width-`d` graph.
pub fn transformed_dim(transform: TransformKind, d: usize) -> usize {
    match transform {
        TransformKind::Identity => d,
        TransformKind::SealLite { .. } => d + 2,
        TransformKind::PairwiseConditional => d + 1,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmpnnConfig<T> {
    pub layers: Vec<MpnnLayer<T>>,
    pub transform: TransformKind,
    pub pooling: Pooling,
    pub seed: u64,
}

impl<T: Scalar> GmpnnConfig<T> {
    pub fn new(layers: Vec<MpnnLayer<T>>, transform: TransformKind, pooling: Pooling, seed: u64) -> Result<Self> {
        for (t, w) in layers.windows(2).enumerate() {
            if w[0].out_dim() != w[1].in_dim() {
                return Err(Error::InvalidParameter(format!("layer {t} outputs {} but layer {} expects {}", w[0].out_dim(), t + 1, w[1].in_dim())));
            }
        }
        if matches!(pooling, Pooling::NcnPair { .. }) && transform != TransformKind::Identity {
            return Err(Error::PoolingMismatch { pooling: pooling.name(), reason: "requires the identity transform".into() });
        }
        Ok(Self { layers, transform, pooling, seed })
    }

    /// `depth` random layers of width `width` on raw features of width `d`;
    /// layer `t` draws from stream `t` of `seed`.
    pub fn random(
        d: usize,
        width: usize,
        depth: usize,
        activation: Activation,
        transform: TransformKind,
        pooling: Pooling,
        norm_bound: T,
        seed: u64,
    ) -> Result<Self> {
        let mut d_in = transformed_dim(transform, d);
        let layers = (0..depth)
            .map(|t| {
                let mut rng = stream_rng(seed, t as u64);
                let l = MpnnLayer::random(d_in, width, activation, norm_bound, 1.0, &mut rng);
                d_in = width;
                l
            })
            .collect();
        Self::new(layers, transform, pooling, seed)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.layers.first().map(MpnnLayer::in_dim)
    }

    pub fn node_dim(&self, raw_dim: usize) -> usize {
        self.layers.last().map_or(transformed_dim(self.transform, raw_dim), MpnnLayer::out_dim)
    }

    pub fn output_dim(&self, raw_dim: usize) -> usize {
        self.pooling.output_dim(self.node_dim(raw_dim))
    }

    /// `Π_t L_φ_t · max(B_t, 1)`.
    pub fn layer_factor(&self) -> f64 {
        self.layers.iter().map(|l| l.activation.lipschitz() * l.norm_bound.to_f64_lossy().max(1.0)).product()
    }

    /// Activation Lipschitz constants per layer.
    pub fn activation_lipschitz(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.activation.lipschitz()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Embedding<T> {
    pub vector: Vec<T>,
    /// Label of the embedded target.
    pub label: String,
    /// Final node embeddings of the selected nodes, in selection order.
    pub selected: Vec<Vec<T>>,
}

/// Final-layer embeddings of every node of `graph`.
pub fn node_embeddings<T: Scalar>(graph: &FeaturedGraph<T>, layers: &[MpnnLayer<T>]) -> Result<Vec<Vec<T>>> {
    let mut h = graph.features().to_vec();
    for layer in layers {
        h = layer_forward(graph, &h, layer)?;
    }
    Ok(h)
}

fn pool<T: Scalar>(pooling: Pooling, kind: TargetKind, sel: &[Vec<T>], d: usize) -> Result<Vec<T>> {
    let mismatch = |reason: &str| Error::PoolingMismatch { pooling: pooling.name(), reason: reason.into() };
    match pooling {
        Pooling::Sum => {
            let mut acc = vec![T::zero(); d];
            for h in sel {
                add_assign(&mut acc, h);
            }
            Ok(acc)
        }
        Pooling::Hadamard | Pooling::Concat => match sel {
            [x, y] if pooling == Pooling::Hadamard => Ok(hadamard(x, y)),
            [x, y] => Ok(x.iter().chain(y).copied().collect()),
            _ => Err(mismatch(&format!("needs exactly two selected nodes, got {}", sel.len()))),
        },
        Pooling::NcnPair { .. } => {
            if kind != TargetKind::Link || sel.len() < 2 {
                return Err(mismatch("needs a link target"));
            }
            let mut out = hadamard(&sel[0], &sel[1]);
            let mut cn = vec![T::zero(); d];
            for h in &sel[2..] {
                add_assign(&mut cn, h);
            }
            out.extend(cn);
            Ok(out)
        }
    }
}

fn check_pooling<T: Scalar>(target: &RepresentationTarget<'_, T>, config: &GmpnnConfig<T>) -> Result<()> {
    target.validate()?;
    let p = config.pooling;
    if matches!(p, Pooling::Concat | Pooling::Hadamard | Pooling::NcnPair { .. })
        && config.transform == TransformKind::Identity
        && target.kind != TargetKind::Link
    {
        return Err(Error::PoolingMismatch { pooling: p.name(), reason: "needs a link target".into() });
    }
    if let Some(d) = config.input_dim() {
        let got = transformed_dim(config.transform, target.graph.dim());
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    Ok(())
}

/// `Ψ` applied to the final embeddings of the transformed graph's selected nodes.
pub fn embed<T: Scalar>(target: &RepresentationTarget<'_, T>, config: &GmpnnConfig<T>) -> Result<Embedding<T>> {
    check_pooling(target, config)?;
    let t = transform_select(target, config.transform, config.pooling.selection())?;
    let h = node_embeddings(&t.graph, &config.layers)?;
    finish(target, config, t.selected.iter().map(|&v| h[v].clone()).collect())
}

fn finish<T: Scalar>(target: &RepresentationTarget<'_, T>, config: &GmpnnConfig<T>, selected: Vec<Vec<T>>) -> Result<Embedding<T>> {
    let d = config.node_dim(target.graph.dim());
    let vector = pool(config.pooling, target.kind, &selected, d)?;
    Ok(Embedding { vector, label: target.label(), selected })
}

/// [`embed`] over many targets. Under the identity transform node embeddings
/// are computed once per distinct graph.
pub fn embed_many<T: Scalar>(targets: &[RepresentationTarget<'_, T>], config: &GmpnnConfig<T>) -> Result<Vec<Embedding<T>>> {
    if config.transform != TransformKind::Identity {
        return targets.par_iter().map(|t| embed(t, config)).collect();
    }
    let mut graphs: Vec<&FeaturedGraph<T>> = Vec::new();
    let mut slot: HashMap<*const FeaturedGraph<T>, usize> = HashMap::new();
    for t in targets {
        slot.entry(t.graph as *const _).or_insert_with(|| {
            graphs.push(t.graph);
            graphs.len() - 1
        });
    }
    let cache: Vec<Vec<Vec<T>>> = graphs.par_iter().map(|g| node_embeddings(g, &config.layers)).collect::<Result<_>>()?;
    targets
        .iter()
        .map(|t| {
            check_pooling(t, config)?;
            let h = &cache[slot[&(t.graph as *const _)]];
            let sel = transform_select(t, config.transform, config.pooling.selection())?.selected;
            finish(t, config, sel.iter().map(|&v| h[v].clone()).collect())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsumReport {
    pub pooling: String,
    pub trials: usize,
    pub max_ratio: f64,
    pub constant_used: f64,
    /// `max(0, ‖Ψ(F1) − Ψ(F2)‖ − C·Σ‖h(x) − h(σ(x))‖)` over all trials.
    pub max_violation: f64,
}

impl SubsumReport {
    pub fn pass(&self) -> bool {
        self.max_violation <= 1e-9
    }
}

/// Random multisets with entries in `[−b, b]^dim` and random extended
/// bijections between them; elements without a partner map to the zero vector.
/// Concat only sees order-preserving bijections.
pub fn subsum_check(pooling: Pooling, dim: usize, b: f64, trials: usize, seed: u64) -> Result<SubsumReport> {
    if trials == 0 || dim == 0 || !(b > 0.0) {
        return Err(Error::InvalidParameter("need trials ≥ 1, dim ≥ 1 and b > 0".into()));
    }
    let c = pooling.subsum_constant(b);
    let results: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream_rng(seed, trial as u64);
            let sample = |rng: &mut crate::rng::Rng| -> Vec<f64> { (0..dim).map(|_| rng.gen_range(-b..=b)).collect() };
            // Every third trial perturbs the first multiset slightly to probe small distances.
            let near = trial % 3 == 0;
            let (s1, s2) = match pooling {
                Pooling::Sum => (rng.gen_range(0..5), rng.gen_range(0..5)),
                Pooling::Hadamard | Pooling::Concat => (2, 2),
                Pooling::NcnPair { .. } => (2 + rng.gen_range(0..4), 2 + rng.gen_range(0..4)),
            };
            let f1: Vec<Vec<f64>> = (0..s1).map(|_| sample(&mut rng)).collect();
            let f2: Vec<Vec<f64>> = (0..s2)
                .map(|i| match f1.get(i) {
                    Some(x) if near => x.iter().map(|v| (v + rng.gen_range(-1e-3..1e-3)).clamp(-b, b)).collect(),
                    _ => sample(&mut rng),
                })
                .collect();
            let sigma = random_extended_bijection(pooling, s1, s2, &mut rng);
            let zero = vec![0.0; dim];
            let rhs: f64 = sigma.iter().map(|&(i, j)| dist2(i.map_or(&zero, |i| &f1[i]), j.map_or(&zero, |j| &f2[j]))).sum();
            let p1 = pool(pooling, TargetKind::Link, &f1, dim).expect("sampled sizes fit the pooling");
            let p2 = pool(pooling, TargetKind::Link, &f2, dim).expect("sampled sizes fit the pooling");
            let lhs = dist2(&p1, &p2);
            (lhs, rhs)
        })
        .collect();
    let max_ratio = results.iter().filter(|r| r.1 > 1e-12).map(|r| r.0 / r.1).fold(0.0, f64::max);
    let max_violation = results.iter().map(|r| (r.0 - c * r.1).max(0.0)).fold(0.0, f64::max);
    Ok(SubsumReport { pooling: pooling.name(), trials, max_ratio, constant_used: c, max_violation })
}

/// Pairs `(i, j)` of an extended bijection between index sets of sizes `s1`
/// and `s2`; `None` is the extra element mapped to zero.
fn random_extended_bijection(pooling: Pooling, s1: usize, s2: usize, rng: &mut crate::rng::Rng) -> Vec<(Option<usize>, Option<usize>)> {
    let m = s1.max(s2);
    let ext = |s: usize, i: usize| (i < s).then_some(i);
    match pooling {
        Pooling::Concat => (0..2).map(|i| (Some(i), Some(i))).collect(),
        Pooling::NcnPair { .. } => {
            // Endpoints map to endpoints (possibly swapped); the rest freely.
            let swap = rng.gen::<bool>();
            let mut out = vec![(Some(0), Some(usize::from(swap))), (Some(1), Some(usize::from(!swap)))];
            let mut tail: Vec<usize> = (2..m).collect();
            tail.shuffle(rng);
            out.extend((2..m).zip(tail).map(|(i, j)| (ext(s1, i), ext(s2, j))));
            out
        }
        _ => {
            let mut p: Vec<usize> = (0..m).collect();
            p.shuffle(rng);
            (0..m).map(|i| (ext(s1, i), ext(s2, p[i]))).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzPair {
    pub left: String,
    pub right: String,
    pub ud: f64,
    pub embedding_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub pairs: Vec<LipschitzPair>,
    /// Largest `‖Δembedding‖ / ud` over pairs with positive distance; also the
    /// slope of the tightest line through the origin above every pair.
    pub max_ratio: f64,
    /// Largest max-norm of a selected node embedding.
    pub b: f64,
    pub subsum_constant: f64,
    pub theoretical_c: f64,
    /// Pairs at distance zero whose embeddings differ by more than 1e-9.
    pub zero_distance_violations: usize,
    pub pass: bool,
}

/// Samples `num_pairs` distinct target pairs and compares embedding distance
/// with the binomially weighted unrolling distance. The certified constant is
/// `C̃ · Π_t L_φ_t · max(B_t, 1)` with `C̃` the pooling's sub-sum constant.
pub fn lipschitz_certify<T: Scalar>(
    targets: &[RepresentationTarget<'_, T>],
    config: &GmpnnConfig<T>,
    params: &DistanceParams<T>,
    num_pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if !params.is_binomial() || params.depth != config.depth() {
        return Err(Error::InvalidParameter("certification needs binomial weights with depth equal to the layer count".into()));
    }
    if params.transform != config.transform || params.selection != config.pooling.selection() {
        return Err(Error::InvalidParameter("distance and model must share transform and selection".into()));
    }
    if targets.len() < 2 {
        return Err(Error::InvalidParameter("certification needs at least two targets".into()));
    }
    let n = targets.len();
    let all = n * (n - 1) / 2;
    let mut rng = stream_rng(seed, 0);
    let chosen: Vec<(usize, usize)> = if num_pairs >= all {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        rand::seq::index::sample(&mut rng, all, num_pairs).into_iter().map(|k| unrank_pair(k, n)).collect()
    };
    let emb = embed_many(targets, config)?;
    let pairs: Vec<LipschitzPair> = chosen
        .par_iter()
        .map(|&(i, j)| {
            let d = ud(&targets[i], &targets[j], params)?.to_f64_lossy();
            let e = dist2(&emb[i].vector, &emb[j].vector).to_f64_lossy();
            Ok(LipschitzPair { left: emb[i].label.clone(), right: emb[j].label.clone(), ud: d, embedding_distance: e })
        })
        .collect::<Result<_>>()?;
    // Zero when every sampled pair is at distance zero.
    let max_ratio = pairs.iter().filter(|p| p.ud > 1e-12).map(|p| p.embedding_distance / p.ud).fold(0.0, f64::max);
    let b = emb.iter().flat_map(|e| &e.selected).map(|h| norm_inf(h).to_f64_lossy()).fold(0.0, f64::max);
    let subsum_constant = config.pooling.subsum_constant(b);
    let theoretical_c = subsum_constant * config.layer_factor();
    let zero_distance_violations = pairs.iter().filter(|p| p.ud <= 1e-12 && p.embedding_distance > 1e-9).count();
    // Relative slack for rounding in the distance and the forward pass.
    let pass = max_ratio <= theoretical_c * (1.0 + 1e-9) && zero_distance_violations == 0;
    Ok(LipschitzReport { pairs, max_ratio, b, subsum_constant, theoretical_c, zero_distance_violations, pass })
}

/// The `k`-th pair `(i, j)`, `i < j`, in row-major order of the upper triangle.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    for i in 0..n {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair rank out of range")
}
