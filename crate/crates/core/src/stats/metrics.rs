//! Classification and fit metrics for a fitted logistic model.

use std::fmt::Write as _;

use serde::Serialize;

use super::logistic::LogisticModel;
use super::StatsError;
use crate::features::{Dataset, OntologyKind};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Area under the ROC curve as the Mann–Whitney statistic with midranks
/// for ties. `None` when either class is empty.
pub fn auc_mann_whitney(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n = scores.len();
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // ranks are 1-based; a tie block i..j shares (i + 1 + j) / 2
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        let pos_in_block = order[i..j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += midrank * pos_in_block as f64;
        i = j;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Mean fitted probability of positives minus that of negatives.
pub fn tjur_r2(probs: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut sp, mut np, mut sn, mut nn) = (0.0, 0usize, 0.0, 0usize);
    for (&p, &l) in probs.iter().zip(labels) {
        if l {
            sp += p;
            np += 1;
        } else {
            sn += p;
            nn += 1;
        }
    }
    (np > 0 && nn > 0).then(|| sp / np as f64 - sn / nn as f64)
}

pub fn mcfadden_r2(log_likelihood: f64, null_log_likelihood: f64) -> f64 {
    1.0 - log_likelihood / null_log_likelihood
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn at_threshold(probs: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = Confusion {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
        };
        for (&p, &l) in probs.iter().zip(labels) {
            match (p >= threshold, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ontology: OntologyKind,
    pub model_name: String,
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub mcfadden_r2: f64,
    pub tjur_r2: f64,
    /// Set when nothing crossed the threshold and precision was defined as 0.
    pub no_positive_predictions: bool,
}

pub(crate) fn classification(
    probs: &[f64],
    labels: &[bool],
    threshold: f64,
) -> (f64, f64, f64, f64, bool) {
    let c = Confusion::at_threshold(probs, labels, threshold);
    let n = probs.len() as f64;
    let accuracy = (c.tp + c.tn) as f64 / n;
    let predicted_pos = c.tp + c.fp;
    let actual_pos = c.tp + c.fn_;
    let precision = if predicted_pos == 0 {
        0.0
    } else {
        c.tp as f64 / predicted_pos as f64
    };
    let recall = if actual_pos == 0 {
        0.0
    } else {
        c.tp as f64 / actual_pos as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (accuracy, precision, recall, f1, predicted_pos == 0)
}

/// In-sample metrics of `model` on `ds` at the default threshold.
pub fn metrics(model: &LogisticModel, ds: &Dataset) -> Result<MetricsReport, StatsError> {
    let labels = ds.labels();
    let probs: Vec<f64> = ds.matrix().iter().map(|r| model.predict_proba(r)).collect();
    let auc = auc_mann_whitney(&probs, &labels).ok_or(StatsError::SingleClass)?;
    let tjur = tjur_r2(&probs, &labels).ok_or(StatsError::SingleClass)?;
    let (accuracy, precision, recall, f1, no_pos) =
        classification(&probs, &labels, DEFAULT_THRESHOLD);
    Ok(MetricsReport {
        ontology: ds.ontology,
        model_name: ds.model_name.clone(),
        threshold: DEFAULT_THRESHOLD,
        accuracy,
        precision,
        recall,
        f1,
        auc,
        mcfadden_r2: mcfadden_r2(model.log_likelihood, model.null_log_likelihood),
        tjur_r2: tjur,
        no_positive_predictions: no_pos,
    })
}

impl MetricsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "ontology,model,threshold,accuracy,precision,recall,f1,auc,mcfadden_r2,tjur_r2,no_positive_predictions\n",
        );
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.ontology,
            self.model_name,
            self.threshold,
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.auc,
            self.mcfadden_r2,
            self.tjur_r2,
            self.no_positive_predictions as u8
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_small_example() {
        let auc = auc_mann_whitney(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap();
        assert_eq!(auc, 0.75);
    }

    #[test]
    fn auc_ties_count_half() {
        assert_eq!(auc_mann_whitney(&[0.5, 0.5], &[true, false]), Some(0.5));
        assert_eq!(auc_mann_whitney(&[0.5, 0.5], &[true, true]), None);
    }

    #[test]
    fn perfect_scores() {
        let probs = [1.0, 1.0, 0.0, 0.0];
        let labels = [true, true, false, false];
        assert_eq!(auc_mann_whitney(&probs, &labels), Some(1.0));
        assert_eq!(tjur_r2(&probs, &labels), Some(1.0));
        let (acc, prec, rec, f1, none) = classification(&probs, &labels, 0.5);
        assert_eq!((acc, prec, rec, f1, none), (1.0, 1.0, 1.0, 1.0, false));
    }

    #[test]
    fn no_positive_predictions_flagged() {
        let (_, prec, rec, f1, none) = classification(&[0.1, 0.2], &[true, false], 0.5);
        assert_eq!(prec, 0.0);
        assert_eq!(rec, 0.0);
        assert_eq!(f1, 0.0);
        assert!(none);
    }

    #[test]
    fn mcfadden_of_identical_fits_is_zero() {
        assert_eq!(mcfadden_r2(-12.5, -12.5), 0.0);
    }
}
