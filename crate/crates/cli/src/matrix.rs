//! Distance-matrix CSV files and the default ε grid.

use std::path::Path;

use mpnngb::DistanceMatrix;
use serde_json::Value;

use crate::error::usage;
use crate::output::{num, Table};
use crate::Result;

/// Header row of target labels, then one row of distances per target.
pub fn matrix_table(labels: &[String], m: &DistanceMatrix) -> Table {
    let mut t = Table::with_columns("distance_matrix", labels.to_vec());
    for row in m.rows() {
        t.push(row.iter().map(|&x| num(x)).collect::<Vec<Value>>());
    }
    t
}

pub fn read_matrix(path: &Path) -> Result<(Vec<String>, DistanceMatrix)> {
    let mut r = csv::Reader::from_path(path)?;
    let labels: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|x| x.trim().parse::<f64>().map_err(|_| crate::CliError::Usage(format!("non-numeric matrix entry `{x}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != labels.len() {
        return usage(format!("matrix has {} labels but {} rows", labels.len(), rows.len()));
    }
    Ok((labels, DistanceMatrix::new(rows)?))
}

/// Median of the off-diagonal entries; the median of the positive ones when
/// that is zero.
pub fn median_distance(m: &DistanceMatrix) -> Option<f64> {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (!v.is_empty()).then(|| {
            let k = v.len() / 2;
            if v.len() % 2 == 1 {
                v[k]
            } else {
                0.5 * (v[k - 1] + v[k])
            }
        })
    };
    let all: Vec<f64> = m.pairs().map(|p| p.2).collect();
    match median(all.clone()) {
        Some(x) if x > 0.0 => Some(x),
        _ => median(all.into_iter().filter(|&x| x > 0.0).collect()),
    }
}

/// 16 geometric points spanning `[0.01, 2]·median`.
pub fn default_epsilon_grid(m: &DistanceMatrix) -> Result<Vec<f64>> {
    let Some(med) = median_distance(m) else {
        return usage("all pairwise distances are zero; pass an explicit ε grid");
    };
    let (lo, hi) = (0.01 * med, 2.0 * med);
    Ok((0..16).map(|i| lo * (hi / lo).powf(i as f64 / 15.0)).collect())
}
