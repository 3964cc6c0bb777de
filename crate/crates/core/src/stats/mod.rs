//! Univariate contrasts, logistic regression and model metrics.

mod logistic;
mod metrics;
mod standardize;
pub mod tdist;
mod univariate;

pub use logistic::{
    fit_irls, fit_logistic, fit_logistic_with, fit_null, log_likelihood, score_vector, sigmoid,
    FitOptions, LogisticFit, LogisticModel,
};
pub use metrics::{
    auc_mann_whitney, mcfadden_r2, metrics, tjur_r2, Confusion, MetricsReport, DEFAULT_THRESHOLD,
};
pub use standardize::Standardizer;
pub use univariate::{
    cohens_d, pearson, univariate_report, usage_correlation_csv, welch_t, FeatureContrast,
    UnivariateReport, WelchT,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("column `{0}` has zero variance")]
    DegenerateColumn(String),
    #[error("sample of size {0} is too small (need at least 2)")]
    UndersizedSample(usize),
    #[error("pooled standard deviation is zero")]
    DegenerateSample,
    #[error("both outcome classes are required")]
    SingleClass,
    #[error("weighted normal matrix is singular")]
    Singular,
    #[error("design contains non-finite values")]
    NonFinite,
    #[error("row lengths do not match")]
    DimensionMismatch,
}
