//! Seeded synthetic data for benchmarks, oracles and demos.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curie::Curie;
use crate::features::{Dataset, DatasetRow, FeatureVector, OntologyKind};
use crate::stats::sigmoid;

/// Standard normal draw by Box–Muller.
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `n` rows of independent standard normal predictors with labels drawn
/// from a logistic model with the given intercept and coefficients.
pub fn logistic_sample(
    n: usize,
    intercept: f64,
    beta: &[f64],
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = beta.iter().map(|_| standard_normal(&mut rng)).collect();
        let eta = intercept + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
        y.push(rng.random::<f64>() < sigmoid(eta));
        x.push(row);
    }
    (x, y)
}

/// How labels relate to the generated features.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LabelModel {
    /// Independent fair coin flips.
    Random,
    /// Success is more likely for well-annotated, short-id terms.
    AnnotationDriven,
    /// The label equals the leaf flag.
    EqualsLeaf,
}

/// A dataset of `n` (< 1,000,000) HPO-like terms with plausible feature
/// ranges and distinct identifiers.
pub fn feature_dataset(n: usize, labels: LabelModel, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coin = Bernoulli::new(0.5).expect("valid probability");
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        // distinct identifiers, about a third starting with 000
        let digits = if i < 10_000 && rng.random_bool(1.0 / 3.0) {
            format!("000{i:04}")
        } else {
            format!("{}{:06}", rng.random_range(1..10), i)
        };
        let term_id: Curie = format!("HP:{digits}").parse().expect("valid curie");
        let annotation_count = if rng.random_bool(0.4) {
            0
        } else {
            rng.random_range(1..60)
        };
        let leaf = rng.random_bool(0.7);
        let depth = rng.random_range(1..13);
        let features = FeatureVector {
            identifier_entropy: crate::features::identifier_entropy(&term_id),
            term_id,
            pmc_terms: rng.random_range(0..5000),
            pmc_identifiers: if rng.random_bool(0.8) {
                0
            } else {
                rng.random_range(1..30)
            },
            annotation_count,
            characters: rng.random_range(3..80),
            leaf,
            depth,
        };
        let label = match labels {
            LabelModel::Random => coin.sample(&mut rng),
            LabelModel::AnnotationDriven => {
                let eta = -2.5 + 0.08 * annotation_count as f64
                    - if annotation_count == 0 { 1.5 } else { 0.0 }
                    + if features.leading_000() { 0.7 } else { 0.0 };
                rng.random::<f64>() < sigmoid(eta)
            }
            LabelModel::EqualsLeaf => leaf,
        };
        rows.push(DatasetRow { features, label });
    }
    Dataset {
        rows,
        ontology: OntologyKind::Hpo,
        model_name: "synthetic".into(),
    }
}
