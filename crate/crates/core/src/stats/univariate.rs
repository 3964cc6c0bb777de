//! Group contrasts between correctly and incorrectly linked terms.

use std::fmt::Write as _;

use serde::Serialize;

use super::standardize::{mean, variance};
use super::tdist::t_two_sided_p;
use super::StatsError;
use crate::features::{Dataset, OntologyKind, FEATURE_COUNT, FEATURE_NAMES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchT {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn check_size(xs: &[f64]) -> Result<(), StatsError> {
    if xs.len() < 2 {
        Err(StatsError::UndersizedSample(xs.len()))
    } else {
        Ok(())
    }
}

/// Welch's unequal-variance t test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<WelchT, StatsError> {
    check_size(a)?;
    check_size(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        // both samples constant
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            WelchT { t: 0.0, df, p: 1.0 }
        } else {
            WelchT {
                t: diff.signum() * f64::INFINITY,
                df,
                p: 0.0,
            }
        });
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(WelchT {
        t,
        df,
        p: t_two_sided_p(t, df),
    })
}

fn pooled_sd(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    (((na - 1.0) * variance(a) + (nb - 1.0) * variance(b)) / (na + nb - 2.0)).sqrt()
}

/// Standardized mean difference `(mean(a) - mean(b)) / pooled SD`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    check_size(a)?;
    check_size(b)?;
    let sd = pooled_sd(a, b);
    if sd == 0.0 || !sd.is_finite() {
        return Err(StatsError::DegenerateSample);
    }
    Ok((mean(a) - mean(b)) / sd)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureContrast {
    pub feature: String,
    pub mean_z_correct: f64,
    pub mean_z_incorrect: f64,
    /// `mean_z_correct - mean_z_incorrect`
    pub diff: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub cohens_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnivariateReport {
    pub ontology: OntologyKind,
    pub model_name: String,
    pub n_correct: usize,
    pub n_incorrect: usize,
    /// Sorted by |d|, largest first.
    pub features: Vec<FeatureContrast>,
}

/// Standardizes each predictor over all rows, then contrasts the two label
/// groups. A constant predictor contributes zeros rather than an error; a
/// predictor that separates the groups perfectly gets an infinite `d`.
pub fn univariate_report(ds: &Dataset) -> Result<UnivariateReport, StatsError> {
    let labels = ds.labels();
    let n_correct = labels.iter().filter(|&&l| l).count();
    let n_incorrect = labels.len() - n_correct;
    if n_correct == 0 || n_incorrect == 0 {
        return Err(StatsError::SingleClass);
    }
    let matrix = ds.matrix();
    let mut features = Vec::with_capacity(FEATURE_COUNT);
    for (j, name) in FEATURE_NAMES.iter().enumerate() {
        let col: Vec<f64> = matrix.iter().map(|r| r[j]).collect();
        let m = mean(&col);
        let sd = if col.len() > 1 {
            variance(&col).sqrt()
        } else {
            0.0
        };
        let z: Vec<f64> = col
            .iter()
            .map(|x| if sd > 0.0 { (x - m) / sd } else { 0.0 })
            .collect();
        let pos: Vec<f64> = z
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l)
            .map(|(&v, _)| v)
            .collect();
        let neg: Vec<f64> = z
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| !l)
            .map(|(&v, _)| v)
            .collect();
        let (mp, mn) = (mean(&pos), mean(&neg));
        let diff = mp - mn;

        let (t_statistic, p_value) = if pos.len() >= 2 && neg.len() >= 2 {
            let w = welch_t(&pos, &neg)?;
            (w.t, w.p)
        } else {
            (f64::NAN, f64::NAN)
        };
        let d = if pos.len() >= 2 && neg.len() >= 2 {
            match cohens_d(&pos, &neg) {
                Ok(d) => d,
                Err(StatsError::DegenerateSample) if diff == 0.0 => 0.0,
                Err(StatsError::DegenerateSample) => diff.signum() * f64::INFINITY,
                Err(e) => return Err(e),
            }
        } else {
            f64::NAN
        };
        features.push(FeatureContrast {
            feature: name.to_string(),
            mean_z_correct: mp,
            mean_z_incorrect: mn,
            diff,
            t_statistic,
            p_value,
            cohens_d: d,
        });
    }
    features.sort_by(|a, b| {
        b.cohens_d
            .abs()
            .total_cmp(&a.cohens_d.abs())
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(UnivariateReport {
        ontology: ds.ontology,
        model_name: ds.model_name.clone(),
        n_correct,
        n_incorrect,
        features,
    })
}

impl UnivariateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "ontology,model,feature,mean_z_correct,mean_z_incorrect,diff,t_statistic,p_value,cohens_d\n",
        );
        for f in &self.features {
            let _ = writeln!(
                out,
                "{},{},{},{:.10},{:.10},{:.10},{:.6},{:.6e},{:.6}",
                self.ontology,
                self.model_name,
                f.feature,
                f.mean_z_correct,
                f.mean_z_incorrect,
                f.diff,
                f.t_statistic,
                f.p_value,
                f.cohens_d
            );
        }
        out
    }
}

/// Pearson correlation; `None` when either input is constant or shorter
/// than two values.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// Correlation between literature mentions of identifiers and curated
/// annotation counts, as `ontology,model,feature_a,feature_b,pearson_r`.
pub fn usage_correlation_csv(ds: &Dataset) -> String {
    let col = |name: &str| {
        let j = FEATURE_NAMES
            .iter()
            .position(|n| *n == name)
            .expect("known feature");
        ds.matrix().iter().map(|r| r[j]).collect::<Vec<f64>>()
    };
    let r = pearson(&col("pmc_identifiers"), &col("annotation_count"));
    format!(
        "ontology,model,feature_a,feature_b,pearson_r\n{},{},pmc_identifiers,annotation_count,{}\n",
        ds.ontology,
        ds.model_name,
        r.map_or(String::new(), |r| r.to_string())
    )
}
