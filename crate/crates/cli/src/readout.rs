//! Linear readout trained by full-batch gradient descent on mean binary
//! cross-entropy. The reported loss is `−[y·ln σ + (1−y)·ln(1−σ)] ≥ 0` with
//! `σ` clipped to `[1e−12, 1 − 1e−12]`, so it never exceeds [`LOSS_BOUND`].

use mpnngb::linalg::dot;
use mpnngb::rng::rng_from_seed;
use mpnngb::stability::TransductiveLearner;
use rand::Rng;

use crate::error::usage;
use crate::{CliError, Result};

pub const PROB_CLIP: f64 = 1e-12;
/// `ln(1e12)`, the largest value the clipped loss can take.
pub const LOSS_BOUND: f64 = 27.631021115928547;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn bce(z: f64, y: u8) -> f64 {
    let p = sigmoid(z).clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn mean_loss(w: &[f64], h: &[Vec<f64>], y: &[u8]) -> f64 {
    h.iter().zip(y).map(|(x, &t)| bce(dot(w, x), t)).sum::<f64>() / h.len() as f64
}

/// `mean((σ(wᵀh) − y)·h)`.
pub fn gradient(w: &[f64], h: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    for (x, &t) in h.iter().zip(y) {
        let r = sigmoid(dot(w, x)) - f64::from(t);
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += r * xi;
        }
    }
    let n = h.len() as f64;
    g.iter_mut().for_each(|gi| *gi /= n);
    g
}

#[derive(Clone, Debug, PartialEq)]
pub struct Readout {
    pub weights: Vec<f64>,
    /// Loss before every step and after the last one.
    pub losses: Vec<f64>,
}

impl Readout {
    pub fn logit(&self, h: &[f64]) -> f64 {
        dot(&self.weights, h)
    }

    /// Whether the moving average over `window` steps never increases.
    pub fn smoothed_monotone(&self, window: usize) -> bool {
        let w = window.max(1);
        let avg: Vec<f64> = self.losses.windows(w).map(|s| s.iter().sum::<f64>() / w as f64).collect();
        avg.windows(2).all(|p| p[1] <= p[0] + 1e-12)
    }
}

/// Weights start uniform in `[−0.01, 0.01]`.
pub fn train_readout(h: &[Vec<f64>], y: &[u8], lr: f64, epochs: usize, seed: u64) -> Result<Readout> {
    if h.is_empty() || h.len() != y.len() {
        return usage("readout needs one binary label per embedding");
    }
    if y.iter().any(|&t| t > 1) {
        return usage("labels must be binary");
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return usage("learning rate must be positive");
    }
    let dim = h[0].len();
    if h.iter().any(|x| x.len() != dim) {
        return usage("embeddings have different widths");
    }
    let mut rng = rng_from_seed(seed);
    let mut w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.01..=0.01)).collect();
    let mut losses = Vec::with_capacity(epochs + 1);
    for step in 0..=epochs {
        let loss = mean_loss(&w, h, y);
        if !loss.is_finite() {
            return Err(CliError::Divergence { step, loss });
        }
        losses.push(loss);
        if step == epochs {
            break;
        }
        let g = gradient(&w, h, y);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Divergence { step, loss });
        }
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= lr * gi;
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Divergence { step: step + 1, loss: f64::NAN });
        }
    }
    Ok(Readout { weights: w, losses })
}

/// Per-coordinate standardisation fitted on training rows, followed by a
/// constant bias coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..d).map(|k| rows.iter().map(|r| r[k]).sum::<f64>() / n).collect();
        let scale = (0..d)
            .map(|k| {
                let var = rows.iter().map(|r| (r[k] - mean[k]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).chain(std::iter::once(1.0)).collect()
    }
}

/// Standardise on `train`, fit, and return logits for every row of `pool`.
pub fn fit_logits(pool: &[Vec<f64>], labels: &[u8], train: &[usize], lr: f64, epochs: usize, seed: u64) -> Result<(Readout, Vec<f64>)> {
    let st = Standardizer::fit(&train.iter().map(|&i| pool[i].as_slice()).collect::<Vec<_>>());
    let x: Vec<Vec<f64>> = pool.iter().map(|r| st.apply(r)).collect();
    let h: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
    let y: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
    let r = train_readout(&h, &y, lr, epochs, seed)?;
    let logits = x.iter().map(|row| r.logit(row)).collect();
    Ok((r, logits))
}

/// The readout as a transductive learner over a fixed embedding pool.
pub struct ReadoutLearner<'a> {
    pub pool: &'a [Vec<f64>],
    pub labels: &'a [u8],
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TransductiveLearner for ReadoutLearner<'_> {
    fn pool_size(&self) -> usize {
        self.pool.len()
    }

    fn labels(&self) -> &[u8] {
        self.labels
    }

    fn fit_predict(&self, train: &[usize]) -> Vec<f64> {
        let mut sorted = train.to_vec();
        sorted.sort_unstable();
        fit_logits(self.pool, self.labels, &sorted, self.lr, self.epochs, self.seed).expect("valid readout inputs").1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_bound_is_clip_level() {
        assert!((LOSS_BOUND - 1e12f64.ln()).abs() < 1e-12);
        assert!((bce(-100.0, 1) - LOSS_BOUND).abs() < 1e-9);
        assert!(bce(0.0, 0) > 0.0);
    }

    #[test]
    fn single_sample_loss_strictly_decreases() {
        let r = train_readout(&[vec![1.0, 0.0]], &[1], 0.5, 50, 0).unwrap();
        assert!(r.losses.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_embeddings_stay_at_ln2() {
        let h = vec![vec![0.0; 3]; 4];
        let r = train_readout(&h, &[0, 1, 1, 1], 0.3, 20, 5).unwrap();
        assert!(r.losses.iter().all(|l| (l - std::f64::consts::LN_2).abs() < 1e-15));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from_seed(3);
        let h: Vec<Vec<f64>> = (0..20).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<u8> = (0..20).map(|_| rng.gen_range(0..2)).collect();
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = gradient(&w, &h, &y);
        let eps = 1e-6;
        for k in 0..5 {
            let (mut a, mut b) = (w.clone(), w.clone());
            a[k] += eps;
            b[k] -= eps;
            let fd = (mean_loss(&a, &h, &y) - mean_loss(&b, &h, &y)) / (2.0 * eps);
            assert!((fd - g[k]).abs() <= 1e-6, "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        // Opposite labels on one saturated input keep the gradient at ±h/2.
        let h = vec![vec![1e300], vec![1e300]];
        assert!(matches!(train_readout(&h, &[0, 1], 1e10, 5, 0), Err(CliError::Divergence { .. })));
    }
}
