//! Unpenalized logistic regression fitted by Newton–Raphson (IRLS).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::StatsError;
use crate::features::{Dataset, OntologyKind, FEATURE_NAMES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once every score component is at most this in magnitude.
    pub gradient_tol: f64,
    /// Or once an iteration changes the log-likelihood by at most this.
    pub loglik_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 100,
            gradient_tol: 1e-8,
            loglik_tol: 1e-10,
        }
    }
}

/// Raw fit on an arbitrary design (intercept added implicitly).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_gradient: f64,
    /// Fitted probabilities reproduce the labels, so the MLE does not exist.
    pub separation: bool,
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn linear_predictor(row: &[f64], intercept: f64, coefs: &[f64]) -> f64 {
    intercept + row.iter().zip(coefs).map(|(x, b)| x * b).sum::<f64>()
}

/// Bernoulli log-likelihood of `y` under the logistic model.
pub fn log_likelihood(x: &[Vec<f64>], y: &[bool], intercept: f64, coefs: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = linear_predictor(row, intercept, coefs);
            let yv = if yi { 1.0 } else { 0.0 };
            yv * eta - softplus(eta)
        })
        .sum()
}

/// Analytic gradient of [`log_likelihood`]; index 0 is the intercept.
pub fn score_vector(x: &[Vec<f64>], y: &[bool], intercept: f64, coefs: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; coefs.len() + 1];
    for (row, &yi) in x.iter().zip(y) {
        let r = (if yi { 1.0 } else { 0.0 }) - sigmoid(linear_predictor(row, intercept, coefs));
        g[0] += r;
        for (gj, xj) in g[1..].iter_mut().zip(row) {
            *gj += r * xj;
        }
    }
    g
}

/// Solves `a x = b` for symmetric positive definite `a` (row-major, k×k).
fn cholesky_solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                // pivots lost to cancellation count as singular
                if !s.is_finite() || s <= 1e-13 * a[i * k + i].abs() {
                    return None;
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|p| l[i * k + p] * z[p]).sum();
        z[i] = (b[i] - s) / l[i * k + i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|p| l[p * k + i] * x[p]).sum();
        x[i] = (z[i] - s) / l[i * k + i];
    }
    Some(x)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Every fitted probability is within `tol` of its label.
fn perfectly_predicted(
    x: &[Vec<f64>],
    y: &[bool],
    intercept: f64,
    coefs: &[f64],
    tol: f64,
) -> bool {
    x.iter().zip(y).all(|(row, &yi)| {
        let p = sigmoid(linear_predictor(row, intercept, coefs));
        (if yi { 1.0 - p } else { p }) < tol
    })
}

/// Maximum-likelihood fit with an intercept. Separation is reported through
/// `converged = false` and `separation = true` rather than an error.
pub fn fit_irls(x: &[Vec<f64>], y: &[bool], opts: FitOptions) -> Result<LogisticFit, StatsError> {
    let n = y.len();
    if x.len() != n {
        return Err(StatsError::DimensionMismatch);
    }
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(StatsError::SingleClass);
    }
    let k = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != k) {
        return Err(StatsError::DimensionMismatch);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let dim = k + 1;

    let ybar = n_pos as f64 / n as f64;
    let mut beta = vec![0.0; dim];
    beta[0] = (ybar / (1.0 - ybar)).ln();
    let mut ll = log_likelihood(x, y, beta[0], &beta[1..]);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if perfectly_predicted(x, y, beta[0], &beta[1..], 1e-8) {
            separation = true;
            break;
        }
        // score and observed information in one pass
        let mut g = vec![0.0; dim];
        let mut h = vec![0.0; dim * dim];
        let mut saturated = false;
        for (row, &yi) in x.iter().zip(y) {
            let p = sigmoid(linear_predictor(row, beta[0], &beta[1..]));
            let w = p * (1.0 - p);
            saturated |= w < 1e-12;
            let r = (if yi { 1.0 } else { 0.0 }) - p;
            let xi = |j: usize| if j == 0 { 1.0 } else { row[j - 1] };
            for a in 0..dim {
                g[a] += r * xi(a);
                for b in 0..=a {
                    h[a * dim + b] += w * xi(a) * xi(b);
                }
            }
        }
        if max_abs(&g) <= opts.gradient_tol {
            converged = true;
            break;
        }
        for a in 0..dim {
            for b in 0..a {
                h[b * dim + a] = h[a * dim + b];
            }
        }
        let step = match cholesky_solve(&h, &g, dim) {
            Some(s) => s,
            None => {
                let scale = (0..dim).map(|i| h[i * dim + i]).fold(1.0, f64::max);
                let mut jittered = h.clone();
                for i in 0..dim {
                    jittered[i * dim + i] += 1e-10 * scale;
                }
                match cholesky_solve(&jittered, &g, dim) {
                    Some(s) => s,
                    None if saturated => {
                        separation = true;
                        break;
                    }
                    None => return Err(StatsError::Singular),
                }
            }
        };

        // step halving keeps the likelihood from decreasing
        let mut t = 1.0;
        let mut candidate;
        let mut cand_ll;
        loop {
            candidate = beta
                .iter()
                .zip(&step)
                .map(|(b, s)| b + t * s)
                .collect::<Vec<_>>();
            cand_ll = log_likelihood(x, y, candidate[0], &candidate[1..]);
            if cand_ll >= ll - 1e-12 * ll.abs() || t < 1e-10 {
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let change = (cand_ll - ll).abs();
        beta = candidate;
        ll = cand_ll;
        if change <= opts.loglik_tol {
            if perfectly_predicted(x, y, beta[0], &beta[1..], 1e-8) || saturated && ll > -1e-6 {
                separation = true;
            } else {
                converged = true;
            }
            break;
        }
    }

    let g = score_vector(x, y, beta[0], &beta[1..]);
    Ok(LogisticFit {
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        log_likelihood: ll,
        converged,
        iterations,
        max_abs_gradient: max_abs(&g),
        separation,
    })
}

/// A fitted model on standardized predictors, with the intercept-only
/// baseline on the same rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub ontology: OntologyKind,
    pub model_name: String,
    pub n_obs: usize,
    pub intercept: f64,
    /// Per-SD effects, in the standardizer's column order.
    pub coefficients: Vec<f64>,
    pub standardizer: Standardizer,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_abs_gradient: f64,
    pub separation_warning: bool,
}

impl LogisticModel {
    /// Fitted probability for one row of raw (unstandardized) predictors.
    pub fn predict_proba(&self, raw: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(raw);
        sigmoid(linear_predictor(&z, self.intercept, &self.coefficients))
    }

    /// `(feature, coefficient)` sorted by magnitude, largest first.
    pub fn ranked_coefficients(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self
            .standardizer
            .names
            .iter()
            .map(String::as_str)
            .zip(self.coefficients.iter().copied())
            .collect();
        v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(b.0)));
        v
    }

    pub fn coefficients_csv(&self) -> String {
        let mut out = String::from("ontology,model,feature,coefficient\n");
        let _ = writeln!(
            out,
            "{},{},intercept,{:.10}",
            self.ontology, self.model_name, self.intercept
        );
        for (name, c) in self.ranked_coefficients() {
            let _ = writeln!(out, "{},{},{name},{c:.10}", self.ontology, self.model_name);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Intercept-only fit; shares the code path of [`fit_irls`].
pub fn fit_null(y: &[bool], opts: FitOptions) -> Result<LogisticFit, StatsError> {
    let empty = vec![Vec::new(); y.len()];
    fit_irls(&empty, y, opts)
}

/// Standardizes the nine predictors of `ds` and fits the full model.
pub fn fit_logistic(ds: &Dataset) -> Result<LogisticModel, StatsError> {
    fit_logistic_with(ds, FitOptions::default())
}

pub fn fit_logistic_with(ds: &Dataset, opts: FitOptions) -> Result<LogisticModel, StatsError> {
    let y = ds.labels();
    let raw: Vec<Vec<f64>> = ds.matrix().iter().map(|r| r.to_vec()).collect();
    let standardizer = Standardizer::fit(&raw, &FEATURE_NAMES)?;
    let z = standardizer.apply(&raw);
    let fit = fit_irls(&z, &y, opts)?;
    let null = fit_null(&y, opts)?;
    Ok(LogisticModel {
        ontology: ds.ontology,
        model_name: ds.model_name.clone(),
        n_obs: y.len(),
        intercept: fit.intercept,
        coefficients: fit.coefficients,
        standardizer,
        log_likelihood: fit.log_likelihood,
        null_log_likelihood: null.log_likelihood,
        converged: fit.converged,
        iterations: fit.iterations,
        max_abs_gradient: fit.max_abs_gradient,
        separation_warning: fit.separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_small_system() {
        // [[4, 2], [2, 3]] x = [2, 1] -> x = [0.5, 0]
        let x = cholesky_solve(&[4.0, 2.0, 2.0, 3.0], &[2.0, 1.0], 2).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15);
        assert!(cholesky_solve(&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn balanced_null_model() {
        let y = [true, false, true, false];
        let fit = fit_null(&y, FitOptions::default()).unwrap();
        assert_eq!(fit.intercept, 0.0);
        assert!(fit.converged);
        assert_eq!(sigmoid(fit.intercept), 0.5);
        assert!((fit.log_likelihood - 4.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn known_two_point_fit() {
        // x = 0: one of two positive; x = ln 2: two of three positive
        let ln2 = 2f64.ln();
        let x = vec![vec![0.0], vec![0.0], vec![ln2], vec![ln2], vec![ln2]];
        let y = [true, false, true, true, false];
        let fit = fit_irls(&x, &y, FitOptions::default()).unwrap();
        assert!(fit.converged);
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn separation_is_flagged_not_fatal() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<bool> = (0..20).map(|i| i >= 10).collect();
        let fit = fit_irls(&x, &y, FitOptions::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.separation);
        assert!(fit.coefficients[0] > 1.0);
    }

    #[test]
    fn duplicate_columns_fall_back_to_jitter() {
        let x: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 4) as f64, (i % 4) as f64])
            .collect();
        let y: Vec<bool> = (0..12).map(|i| i % 3 == 0).collect();
        let fit = fit_irls(&x, &y, FitOptions::default()).unwrap();
        assert!((fit.coefficients[0] - fit.coefficients[1]).abs() < 1e-6);
        assert!(fit.log_likelihood.is_finite());
    }

    #[test]
    fn nan_design_rejected() {
        let x = vec![vec![f64::NAN], vec![1.0], vec![2.0]];
        assert_eq!(
            fit_irls(&x, &[true, false, true], FitOptions::default()).unwrap_err(),
            StatsError::NonFinite
        );
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(
            fit_null(&[true, true], FitOptions::default()).unwrap_err(),
            StatsError::SingleClass
        );
    }
}
