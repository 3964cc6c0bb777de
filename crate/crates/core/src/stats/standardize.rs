use serde::{Deserialize, Serialize};

use super::StatsError;

/// Column-wise z-scoring with the sample standard deviation (n - 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub names: Vec<String>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
/// Sample variance; exactly zero for a constant sample, where the rounded
/// mean would otherwise leave a tiny positive residue.
pub(crate) fn variance(xs: &[f64]) -> f64 {
    if xs.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r[j]).collect()
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>], names: &[&str]) -> Result<Self, StatsError> {
        if rows.len() < 2 {
            return Err(StatsError::TooFewRows {
                needed: 2,
                got: rows.len(),
            });
        }
        let k = names.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(StatsError::DimensionMismatch);
        }
        let mut means = Vec::with_capacity(k);
        let mut sds = Vec::with_capacity(k);
        for (j, name) in names.iter().enumerate() {
            let col = column(rows, j);
            let constant = col.iter().all(|&v| v == col[0]);
            let sd = variance(&col).sqrt();
            if constant || !sd.is_finite() || sd == 0.0 {
                return Err(StatsError::DegenerateColumn(name.to_string()));
            }
            means.push(mean(&col));
            sds.push(sd);
        }
        Ok(Standardizer {
            names: names.iter().map(|s| s.to_string()).collect(),
            means,
            sds,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}
