//! Empirical uniform transductive stability.
//!
//! With `π` a random split into `m` training and `u` test points and `π^{ij}`
//! the split with training point `i` and test point `j` exchanged, exchangeability
//! gives `E[R_m] − E[R_u] = E[ℓ(A_π, x_i) − ℓ(A_{π^{ij}}, x_i)]`. Every term is
//! at most `L_ℓ·β` in absolute value, which is what the check compares.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::stream_rng;
use crate::{Error, Result};

/// A learner that trains on a subset of a fixed pool of `n` inputs and predicts
/// on all of them. Must be deterministic in `train`.
pub trait TransductiveLearner: Sync {
    fn pool_size(&self) -> usize;
    fn labels(&self) -> &[u8];
    /// Predictions for every pool input after training on `train`.
    fn fit_predict(&self, train: &[usize]) -> Vec<f64>;
}

/// Binary cross-entropy on a logit; 1-Lipschitz in the logit.
pub fn bce_with_logit(z: f64, y: u8) -> f64 {
    // softplus(z) − y·z, computed stably.
    let sp = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    sp - f64::from(y) * z
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub swaps: usize,
    /// Largest prediction change over all swaps and all pool inputs.
    pub beta_hat: f64,
    pub loss_lipschitz: f64,
    /// `|mean(ℓ(A_π, x_i) − ℓ(A_{π^{ij}}, x_i))|`.
    pub swap_gap: f64,
    /// Mean of `R_m(A_π) − R_u(A_π)` over the same splits, for reference.
    pub direct_gap: f64,
    pub pass: bool,
}

pub fn stability_gap_check<L: TransductiveLearner>(learner: &L, m: usize, swaps: usize, seed: u64) -> Result<StabilityReport> {
    let n = learner.pool_size();
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!("need 0 < m < n (m={m}, n={n})")));
    }
    if swaps == 0 {
        return Err(Error::InvalidParameter("swaps must be positive".into()));
    }
    let labels = learner.labels();
    let runs: Vec<(f64, f64, f64)> = (0..swaps)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let (i_pos, j_pos) = (rng.gen_range(0..m), rng.gen_range(m..n));
            let mut train: Vec<usize> = perm[..m].to_vec();
            let p = learner.fit_predict(&train);
            let i = perm[i_pos];
            train[i_pos] = perm[j_pos];
            let q = learner.fit_predict(&train);
            let change = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let gap = bce_with_logit(p[i], labels[i]) - bce_with_logit(q[i], labels[i]);
            let risk = |idx: &[usize]| idx.iter().map(|&k| bce_with_logit(p[k], labels[k])).sum::<f64>() / idx.len() as f64;
            (change, gap, risk(&perm[..m]) - risk(&perm[m..]))
        })
        .collect();
    let beta_hat = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    let swap_gap = (runs.iter().map(|r| r.1).sum::<f64>() / swaps as f64).abs();
    let direct_gap = runs.iter().map(|r| r.2).sum::<f64>() / swaps as f64;
    let loss_lipschitz = 1.0;
    Ok(StabilityReport { swaps, beta_hat, loss_lipschitz, swap_gap, direct_gap, pass: swap_gap <= loss_lipschitz * beta_hat + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(Vec<u8>);

    impl TransductiveLearner for Constant {
        fn pool_size(&self) -> usize {
            self.0.len()
        }
        fn labels(&self) -> &[u8] {
            &self.0
        }
        fn fit_predict(&self, _: &[usize]) -> Vec<f64> {
            vec![0.3; self.0.len()]
        }
    }

    /// Predicts the mean training feature everywhere.
    struct MeanFeature {
        x: Vec<f64>,
        y: Vec<u8>,
    }

    impl TransductiveLearner for MeanFeature {
        fn pool_size(&self) -> usize {
            self.x.len()
        }
        fn labels(&self) -> &[u8] {
            &self.y
        }
        fn fit_predict(&self, train: &[usize]) -> Vec<f64> {
            let mean = train.iter().map(|&i| self.x[i]).sum::<f64>() / train.len() as f64;
            vec![mean; self.x.len()]
        }
    }

    #[test]
    fn constant_predictor_is_perfectly_stable() {
        let r = stability_gap_check(&Constant(vec![0, 1, 1, 0, 1]), 2, 20, 1).unwrap();
        assert_eq!(r.beta_hat, 0.0);
        assert_eq!(r.swap_gap, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn duplicate_inputs_swap_to_no_change() {
        let l = MeanFeature { x: vec![2.0; 6], y: vec![0, 1, 0, 1, 0, 1] };
        let r = stability_gap_check(&l, 3, 30, 2).unwrap();
        assert_eq!(r.beta_hat, 0.0);
    }

    #[test]
    fn mean_learner_satisfies_inequality() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = x.iter().map(|&v| u8::from(v > 0.0)).collect();
        let r = stability_gap_check(&MeanFeature { x, y }, 10, 100, 3).unwrap();
        assert!(r.beta_hat > 0.0);
        assert!(r.pass);
    }

    #[test]
    fn bce_values() {
        assert!((bce_with_logit(0.0, 1) - 2f64.ln()).abs() < 1e-12);
        assert!((bce_with_logit(50.0, 0) - 50.0).abs() < 1e-9);
        assert!(bce_with_logit(50.0, 1) < 1e-20);
    }
}
