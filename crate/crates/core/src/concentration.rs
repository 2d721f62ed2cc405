//! Monte-Carlo checks of the concentration inequalities behind the bounds.
//! An empirical tail passes when it stays below the bound plus `3/√trials`,
//! about three standard deviations of a Bernoulli frequency estimate.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{stream_rng, Rng};
use crate::{Error, Result};

const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailReport {
    pub check: String,
    pub trials: usize,
    pub slack: f64,
    pub rows: Vec<TailRow>,
    pub pass: bool,
    /// Free-form description of the simulated model.
    pub notes: Vec<String>,
}

/// Runs `trials` draws of `stat` in fixed-size chunks, each with its own RNG
/// stream, and returns for every threshold the fraction of draws with
/// `stat ≥ threshold`.
fn tail_frequencies<F>(trials: usize, seed: u64, thresholds: &[f64], stat: F) -> Vec<f64>
where
    F: Fn(&mut Rng) -> f64 + Sync,
{
    let chunks = trials.div_ceil(CHUNK);
    let counts: Vec<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(trials - c * CHUNK);
            let mut counts = vec![0; thresholds.len()];
            for _ in 0..len {
                let s = stat(&mut rng);
                for (k, &th) in thresholds.iter().enumerate() {
                    // Small tolerance so that exact ties count as exceedances.
                    if s >= th - 1e-9 {
                        counts[k] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    (0..thresholds.len()).map(|k| counts.iter().map(|c| c[k]).sum::<usize>() as f64 / trials as f64).collect()
}

fn report(check: &str, trials: usize, t_grid: &[f64], empirical: Vec<f64>, bound: impl Fn(f64) -> f64, notes: Vec<String>) -> TailReport {
    let slack = 3.0 / (trials as f64).sqrt();
    let rows: Vec<TailRow> = t_grid
        .iter()
        .zip(empirical)
        .map(|(&t, e)| {
            let b = bound(t);
            TailRow { t, empirical: e, bound: b, pass: e <= b + slack }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    TailReport { check: check.into(), trials, slack, rows, pass, notes }
}

fn check_common(trials: usize, t_grid: &[f64]) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("t grid must be positive".into()));
    }
    Ok(())
}

/// Cliques of dependent, identically distributed variables over `K` cells.
/// Every variable in a clique shares one draw from `mu`, the most dependent
/// configuration allowed by the dependency graph. Checks
/// `P(Σ_j |Z_j − n·μ_j| ≥ 2t) ≤ 2^{K+1}·exp(−2t²/(χ·n))` with `χ` the largest clique.
pub fn mc_bhc_dependent(clique_sizes: &[usize], mu: &[f64], trials: usize, t_grid: &[f64], seed: u64) -> Result<TailReport> {
    check_common(trials, t_grid)?;
    let k = mu.len();
    let total: f64 = mu.iter().sum();
    if k == 0 || mu.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter("mu must be a probability vector".into()));
    }
    if clique_sizes.contains(&0) || clique_sizes.is_empty() {
        return Err(Error::InvalidParameter("clique sizes must be positive".into()));
    }
    let n: usize = clique_sizes.iter().sum();
    let chi = *clique_sizes.iter().max().expect("nonempty");
    let dist = WeightedIndex::new(mu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let thresholds: Vec<f64> = t_grid.iter().map(|t| 2.0 * t).collect();
    let emp = tail_frequencies(trials, seed, &thresholds, |rng| {
        let mut z = vec![0usize; k];
        for &s in clique_sizes {
            z[dist.sample(rng)] += s;
        }
        z.iter().zip(mu).map(|(&zj, &p)| (zj as f64 - n as f64 * p).abs()).sum()
    });
    let (nf, chif, kf) = (n as f64, chi as f64, k as f64);
    let notes = vec![format!("n={n} K={k} chi={chi}"), "each clique shares a single draw from mu".into()];
    Ok(report("bhc_dependent", trials, t_grid, emp, |t| 2f64.powf(kf + 1.0) * (-2.0 * t * t / (chif * nf)).exp(), notes))
}

/// Sampling `n` of `n'` cell-labelled items without replacement. Checks
/// `P(|Σ_{j∈S} X_j − n·Σ_{j∈S}|C_j|/n'| ≥ t) ≤ 2·exp(−t²/(2|S|²n))`.
pub fn mc_bhc_permutation(n: usize, cell_sizes: &[usize], subset: &[usize], trials: usize, t_grid: &[f64], seed: u64) -> Result<TailReport> {
    check_common(trials, t_grid)?;
    let n_prime: usize = cell_sizes.iter().sum();
    if n == 0 || n >= n_prime {
        return Err(Error::InvalidParameter(format!("need 0 < n < n' (n={n}, n'={n_prime})")));
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= cell_sizes.len()) {
        return Err(Error::InvalidParameter(format!("cell {j} out of range")));
    }
    let mut s = subset.to_vec();
    s.sort_unstable();
    s.dedup();
    let in_s: Vec<bool> = cell_sizes.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(s.contains(&j), c)).collect();
    let mass: usize = s.iter().map(|&j| cell_sizes[j]).sum();
    let expected = n as f64 * mass as f64 / n_prime as f64;
    let emp = tail_frequencies(trials, seed, t_grid, |rng| {
        let mut idx: Vec<usize> = (0..n_prime).collect();
        let (picked, _) = idx.partial_shuffle(rng, n);
        let x = picked.iter().filter(|&&i| in_s[i]).count();
        (x as f64 - expected).abs()
    });
    let sz = s.len() as f64;
    let nf = n as f64;
    let notes = vec![format!("n={n} n'={n_prime} |S|={} E={expected}", s.len())];
    Ok(report("bhc_permutation", trials, t_grid, emp, |t| 2.0 * (-t * t / (2.0 * sz * sz * nf)).exp(), notes))
}

/// Martingale with independent symmetric `±c_k` increments. Checks
/// `P(|W_N − W_0| ≥ t) ≤ 2·exp(−t²/(2Σc_k²))`.
pub fn azuma_check(c: &[f64], trials: usize, t_grid: &[f64], seed: u64) -> Result<TailReport> {
    check_common(trials, t_grid)?;
    if c.is_empty() || c.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidParameter("bounded-difference constants must be positive".into()));
    }
    let emp = tail_frequencies(trials, seed, t_grid, |rng| c.iter().map(|&ck| if rng.gen::<bool>() { ck } else { -ck }).sum::<f64>().abs());
    let ss: f64 = c.iter().map(|x| x * x).sum();
    let notes = vec![format!("N={} sum c^2={ss}", c.len())];
    Ok(report("azuma", trials, t_grid, emp, |t| 2.0 * (-t * t / (2.0 * ss)).exp(), notes))
}
