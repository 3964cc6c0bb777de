use std::fmt::Write as _;

use serde::Serialize;

use super::OntologyGraph;
use crate::annotations::AnnotationTable;
use crate::features::{identifier_entropy, leading_000};

/// Summary statistics describing one ontology release.
///
/// Means over an empty population are `None`. The annotation and corpus
/// rows are only filled when those sources are supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub concepts: usize,
    pub unreachable: usize,
    pub leaf_pct: Option<f64>,
    pub mean_depth: Option<f64>,
    pub unigram_pct: Option<f64>,
    pub mean_label_chars: Option<f64>,
    pub leading_000_pct: Option<f64>,
    pub mean_identifier_entropy: Option<f64>,
    pub unused_pct: Option<f64>,
    pub mean_annotations: Option<f64>,
    pub mean_pmc_terms: Option<f64>,
    pub mean_pmc_identifiers: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn pct(flags: impl Iterator<Item = bool>) -> Option<f64> {
    mean(flags.map(|b| if b { 100.0 } else { 0.0 }))
}

pub fn ontology_profile(g: &OntologyGraph) -> ProfileReport {
    let terms: Vec<_> = g.terms().collect();
    ProfileReport {
        concepts: terms.len(),
        unreachable: g.report().unreachable.len(),
        leaf_pct: pct(terms.iter().map(|t| g.is_leaf(&t.id).unwrap_or(false))),
        mean_depth: mean(
            terms
                .iter()
                .filter_map(|t| g.depth(&t.id).ok())
                .map(|d| d as f64),
        ),
        unigram_pct: pct(terms
            .iter()
            .map(|t| !t.name.chars().any(char::is_whitespace))),
        mean_label_chars: mean(terms.iter().map(|t| t.name.chars().count() as f64)),
        leading_000_pct: pct(terms.iter().map(|t| leading_000(&t.id))),
        mean_identifier_entropy: mean(terms.iter().map(|t| identifier_entropy(&t.id))),
        unused_pct: None,
        mean_annotations: None,
        mean_pmc_terms: None,
        mean_pmc_identifiers: None,
    }
}

impl ProfileReport {
    /// Adds the usage rows computed over the graph's live terms.
    pub fn with_annotations(mut self, g: &OntologyGraph, table: &AnnotationTable) -> Self {
        let counts: Vec<u64> = g.terms().map(|t| table.count(&t.id)).collect();
        self.unused_pct = pct(counts.iter().map(|&c| c == 0));
        self.mean_annotations = mean(counts.iter().map(|&c| c as f64));
        self
    }

    pub fn with_corpus_means(mut self, terms: Option<f64>, identifiers: Option<f64>) -> Self {
        self.mean_pmc_terms = terms;
        self.mean_pmc_identifiers = identifiers;
        self
    }

    /// `(metric, kind, value)` rows in display order.
    pub fn rows(&self) -> Vec<(&'static str, &'static str, Option<f64>)> {
        vec![
            ("concepts", "count", Some(self.concepts as f64)),
            ("unreachable_terms", "count", Some(self.unreachable as f64)),
            ("unigram_terms", "pct", self.unigram_pct),
            ("leading_000_identifiers", "pct", self.leading_000_pct),
            ("unused_identifiers", "pct", self.unused_pct),
            ("leaf_terms", "pct", self.leaf_pct),
            ("hierarchy_depth", "mean", self.mean_depth),
            ("identifier_count_in_pmc", "mean", self.mean_pmc_identifiers),
            ("term_count_in_pmc", "mean", self.mean_pmc_terms),
            ("term_length", "mean", self.mean_label_chars),
            ("annotations_per_term", "mean", self.mean_annotations),
            ("identifier_entropy", "mean", self.mean_identifier_entropy),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,kind,value\n");
        for (metric, kind, value) in self.rows() {
            let v = match (kind, value) {
                (_, None) => String::new(),
                ("count", Some(v)) => format!("{v:.0}"),
                (_, Some(v)) => format!("{v:.6}"),
            };
            let _ = writeln!(out, "{metric},{kind},{v}");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (metric, kind, value) in self.rows() {
            let v = match (kind, value) {
                (_, None) => "n/a".to_string(),
                ("count", Some(v)) => format!("{v:.0}"),
                ("pct", Some(v)) => format!("{v:.1}%"),
                (_, Some(v)) => format!("{v:.2}"),
            };
            let _ = writeln!(out, "{metric:<26} {kind:<5} {v:>12}");
        }
        out
    }
}
