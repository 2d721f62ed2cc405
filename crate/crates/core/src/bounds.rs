//! Numeric generalization bounds. Everything is evaluated in log space so that
//! cover sizes like `(3/ε)^{dQ}` never overflow intermediate results.

use serde::{Deserialize, Serialize};

use crate::covering::{degree_bounded_covering_bound, SweepRow};
use crate::{Error, Result, Scalar};

/// Where a cover size came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KProvenance {
    Exact,
    Greedy,
    /// Supplied directly by the caller.
    Given,
    /// Analytic bound for bounded-degree graphs.
    DegreeBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint<T> {
    pub epsilon: T,
    /// Natural log of the cover size `K_ε`.
    pub log_k: T,
    pub provenance: KProvenance,
}

impl<T: Scalar> CoverPoint<T> {
    pub fn new(epsilon: T, k: usize, provenance: KProvenance) -> Self {
        Self { epsilon, log_k: T::from_usize_lossy(k).ln(), provenance }
    }

    pub fn k(&self) -> T {
        self.log_k.exp()
    }
}

/// Cover points from an ε sweep, preferring exact sizes when present.
pub fn cover_points<T: Scalar>(sweep: &[SweepRow<T>]) -> Vec<CoverPoint<T>> {
    sweep
        .iter()
        .map(|r| match &r.exact {
            Some(c) => CoverPoint::new(r.epsilon, c.size(), KProvenance::Exact),
            None => CoverPoint::new(r.epsilon, r.greedy.size(), KProvenance::Greedy),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs<T> {
    /// Upper bound `M` on the loss.
    pub loss_bound: T,
    pub loss_lipschitz: T,
    /// End-to-end Lipschitz constant `C` of the loss in the input pseudo-metric.
    pub lipschitz_c: T,
    pub delta: T,
    /// Inductive sample size.
    #[serde(default)]
    pub n: Option<usize>,
    /// Transductive training size.
    #[serde(default)]
    pub m: Option<usize>,
    /// Transductive test size.
    #[serde(default)]
    pub u: Option<usize>,
    #[serde(default)]
    pub covers: Vec<CoverPoint<T>>,
    /// Largest number of samples drawn from one graph.
    #[serde(default)]
    pub d_s: Option<usize>,
    /// Chromatic number of the sample dependency graph.
    #[serde(default)]
    pub chi: Option<usize>,
    /// Uniform transductive stability.
    #[serde(default)]
    pub beta: T,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn new(loss_bound: T, lipschitz_c: T, delta: T) -> Self {
        Self { loss_bound, loss_lipschitz: T::one(), lipschitz_c, delta, n: None, m: None, u: None, covers: Vec::new(), d_s: None, chi: None, beta: T::zero() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.into()));
        if !(self.loss_bound > T::zero()) || !self.loss_bound.is_finite() {
            return bad("loss bound M must be positive");
        }
        if !(self.loss_lipschitz >= T::zero()) || !(self.lipschitz_c >= T::zero()) || !(self.beta >= T::zero()) {
            return bad("Lipschitz constants and beta must be nonnegative");
        }
        if !(self.delta > T::zero() && self.delta <= T::one()) {
            return bad("delta must lie in (0, 1]");
        }
        if self.covers.is_empty() {
            return bad("at least one (epsilon, K) point is required");
        }
        for w in self.covers.windows(2) {
            if !(w[0].epsilon < w[1].epsilon) {
                return bad("epsilon grid must be strictly increasing");
            }
        }
        if self.covers.iter().any(|c| !(c.epsilon > T::zero()) || !(c.log_k >= T::zero())) {
            return bad("epsilon must be positive and K at least 1");
        }
        if [self.n, self.m, self.u, self.d_s, self.chi].contains(&Some(0)) {
            return bad("sample sizes and dependency statistics must be at least 1");
        }
        Ok(())
    }

    fn log_inv_delta(&self) -> T {
        -self.delta.ln()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Inductive,
    XuMannor,
    XuMannorIid,
    Transductive,
    BoundedDegree,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow<T> {
    pub epsilon: T,
    pub log_k: T,
    pub robustness_term: T,
    pub concentration_term: T,
    pub stability_term: T,
    pub total: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport<T> {
    pub kind: BoundKind,
    /// Rows sorted by ε.
    pub rows: Vec<BoundRow<T>>,
    /// Index of the row with the smallest total.
    pub argmin: usize,
    pub provenance: Vec<KProvenance>,
    pub notes: Vec<String>,
}

impl<T: Scalar> BoundReport<T> {
    fn new(kind: BoundKind, rows: Vec<BoundRow<T>>, provenance: Vec<KProvenance>, notes: Vec<String>) -> Self {
        let argmin = (0..rows.len()).fold(0, |b, i| if rows[i].total < rows[b].total { i } else { b });
        Self { kind, rows, argmin, provenance, notes }
    }

    pub fn best(&self) -> &BoundRow<T> {
        &self.rows[self.argmin]
    }
}

/// `ln(a·e^{x} + b)` for `a > 0`, `b ≥ 0`, without forming `e^{x}`.
fn ln_affine<T: Scalar>(x: T, a: T, b: T) -> T {
    let p = a.ln() + x;
    if b <= T::zero() {
        return p;
    }
    let q = b.ln();
    let (hi, lo) = if p > q { (p, q) } else { (q, p) };
    hi + (lo - hi).exp().ln_1p()
}

/// Robustness parameters `(N(ε/2), C·ε)` of a `C`-Lipschitz loss.
pub fn robustness_from_lipschitz<T: Scalar>(k_half_eps: usize, c: T, epsilon: T) -> (usize, T) {
    (k_half_eps, c * epsilon)
}

/// `C = 2·L̃·L_ℓ·Π L_φ`.
pub fn end_to_end_constant<T: Scalar>(l_tilde: T, loss_lipschitz: T, activation_lipschitz: &[T]) -> T {
    T::lit(2.0) * l_tilde * loss_lipschitz * activation_lipschitz.iter().fold(T::one(), |p, &l| p * l)
}

fn require(v: Option<usize>, what: &str) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidParameter(format!("missing {what}")))
}

/// `2Cε + M·√(2·D_S·((2K_ε+1)·ln2 + ln(1/δ)) / N)`.
pub fn inductive_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inputs.validate()?;
    let n = T::from_usize_lossy(require(inputs.n, "sample size N")?);
    let d = T::from_usize_lossy(require(inputs.d_s, "D_S")?);
    let (two, ln2) = (T::lit(2.0), T::lit(std::f64::consts::LN_2));
    let rows = inputs
        .covers
        .iter()
        .map(|c| {
            let ln_inner = ln_affine(c.log_k, two * ln2, ln2 + inputs.log_inv_delta());
            let conc = (inputs.loss_bound.ln() + (two.ln() + d.ln() + ln_inner - n.ln()) / two).exp();
            row(c, two * inputs.lipschitz_c * c.epsilon, conc, T::zero())
        })
        .collect();
    Ok(BoundReport::new(BoundKind::Inductive, rows, provenance(inputs), vec![]))
}

/// `ε_rob + M·√(χ·(2(K+1)·ln2 + 2·ln(1/δ)) / N)` with robustness from the
/// Lipschitz constant, `ε_rob = 2Cε` at cover scale `ε`.
pub fn xu_mannor_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inputs.validate()?;
    let n = T::from_usize_lossy(require(inputs.n, "sample size N")?);
    let chi = T::from_usize_lossy(require(inputs.chi, "chromatic number")?);
    let (two, ln2) = (T::lit(2.0), T::lit(std::f64::consts::LN_2));
    let rows = inputs
        .covers
        .iter()
        .map(|c| {
            let ln_inner = ln_affine(c.log_k, two * ln2, two * ln2 + two * inputs.log_inv_delta());
            let conc = (inputs.loss_bound.ln() + (chi.ln() + ln_inner - n.ln()) / two).exp();
            row(c, two * inputs.lipschitz_c * c.epsilon, conc, T::zero())
        })
        .collect();
    Ok(BoundReport::new(BoundKind::XuMannor, rows, provenance(inputs), vec![]))
}

/// The i.i.d. form `ε_rob + M·√((2K·ln2 + 2·ln(1/δ)) / N)`.
pub fn xu_mannor_iid_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inputs.validate()?;
    let n = T::from_usize_lossy(require(inputs.n, "sample size N")?);
    let (two, ln2) = (T::lit(2.0), T::lit(std::f64::consts::LN_2));
    let rows = inputs
        .covers
        .iter()
        .map(|c| {
            let ln_inner = ln_affine(c.log_k, two * ln2, two * inputs.log_inv_delta());
            let conc = (inputs.loss_bound.ln() + (ln_inner - n.ln()) / two).exp();
            row(c, two * inputs.lipschitz_c * c.epsilon, conc, T::zero())
        })
        .collect();
    Ok(BoundReport::new(BoundKind::XuMannorIid, rows, provenance(inputs), vec![]))
}

/// `2Cε + M·K_ε·(1/√m + 1/√u)·√(2(2K_ε+1)·ln2 + 2·ln(1/δ)) + L_ℓ·β`.
pub fn transductive_bound<T: Scalar>(inputs: &BoundInputs<T>) -> Result<BoundReport<T>> {
    inputs.validate()?;
    let m = T::from_usize_lossy(require(inputs.m, "training size m")?);
    let u = T::from_usize_lossy(require(inputs.u, "test size u")?);
    let (two, ln2) = (T::lit(2.0), T::lit(std::f64::consts::LN_2));
    let ln_sizes = (m.sqrt().recip() + u.sqrt().recip()).ln();
    let stab = inputs.loss_lipschitz * inputs.beta;
    let rows = inputs
        .covers
        .iter()
        .map(|c| {
            let ln_inner = ln_affine(c.log_k, T::lit(4.0) * ln2, two * ln2 + two * inputs.log_inv_delta());
            let conc = (inputs.loss_bound.ln() + c.log_k + ln_sizes + ln_inner / two).exp();
            row(c, two * inputs.lipschitz_c * c.epsilon, conc, stab)
        })
        .collect();
    Ok(BoundReport::new(BoundKind::Transductive, rows, provenance(inputs), vec![]))
}

/// Bounded-degree form `2Cε + M·√(D_S·(4·ln2·(3/ε)^{dQ} + 2·ln2 + 2·ln(1/δ)) / N)`
/// over `ε ∈ (0, 1)`; the supplied cover sizes are replaced by `(3/ε)^{dQ}`.
pub fn bounded_degree_bound<T: Scalar>(inputs: &BoundInputs<T>, d: usize, q: usize, depth: usize) -> Result<BoundReport<T>> {
    let mut inputs = inputs.clone();
    for c in &mut inputs.covers {
        let b = degree_bounded_covering_bound(d, q, depth, c.epsilon.to_f64_lossy())?;
        c.log_k = T::lit(b.log_value);
        c.provenance = KProvenance::DegreeBound;
    }
    inputs.validate()?;
    let n = T::from_usize_lossy(require(inputs.n, "sample size N")?);
    let ds = T::from_usize_lossy(require(inputs.d_s, "D_S")?);
    let (two, ln2) = (T::lit(2.0), T::lit(std::f64::consts::LN_2));
    let rows = inputs
        .covers
        .iter()
        .map(|c| {
            let ln_inner = ln_affine(c.log_k, T::lit(4.0) * ln2, two * ln2 + two * inputs.log_inv_delta());
            let conc = (inputs.loss_bound.ln() + (ds.ln() + ln_inner - n.ln()) / two).exp();
            row(c, two * inputs.lipschitz_c * c.epsilon, conc, T::zero())
        })
        .collect();
    let q_nodes = degree_bounded_covering_bound(d, q, depth, 0.5)?.q_nodes;
    Ok(BoundReport::new(BoundKind::BoundedDegree, rows, provenance(&inputs), vec![format!("Q = {q_nodes}")]))
}

fn row<T: Scalar>(c: &CoverPoint<T>, rob: T, conc: T, stab: T) -> BoundRow<T> {
    BoundRow { epsilon: c.epsilon, log_k: c.log_k, robustness_term: rob, concentration_term: conc, stability_term: stab, total: rob + conc + stab }
}

fn provenance<T: Scalar>(inputs: &BoundInputs<T>) -> Vec<KProvenance> {
    inputs.covers.iter().map(|c| c.provenance).collect()
}
