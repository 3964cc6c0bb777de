//! The nine per-term predictors and the labelled dataset built from them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotations::AnnotationTable;
use crate::corpus::{identifier_query, term_query, CorpusError, CorpusLookup};
use crate::curie::Curie;
use crate::ontology::{OntologyError, OntologyGraph, TermRecord};
use crate::probe::ProbeResult;

/// Predictor names in model column order.
pub const FEATURE_NAMES: [&str; 9] = [
    "pmc_terms",
    "pmc_identifiers",
    "no_annotation",
    "annotation_count",
    "characters",
    "leading_000",
    "identifier_entropy",
    "leaf",
    "depth",
];

pub const FEATURE_COUNT: usize = FEATURE_NAMES.len();

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("missing corpus count for query {query}: {source}")]
    MissingCorpusCount { query: String, source: CorpusError },
    #[error(transparent)]
    Ontology(#[from] OntologyError),
    #[error("duplicate term {0} in feature input")]
    DuplicateTerm(Curie),
    #[error("{mismatched} unmatched terms exceed the allowed {allowed}")]
    TooManyOrphans { mismatched: usize, allowed: usize },
    #[error("feature table: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature table is empty")]
    EmptyTable,
}

/// Shannon entropy in bits of the character distribution of `s`.
pub fn string_entropy(s: &str) -> f64 {
    let mut freq: BTreeMap<char, usize> = BTreeMap::new();
    let mut n = 0usize;
    for ch in s.chars() {
        *freq.entry(ch).or_insert(0) += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    // sum of p * log2(1/p) keeps the single-symbol case at +0.0
    freq.values()
        .map(|&k| {
            let p = k as f64 / n;
            p * (1.0 / p).log2()
        })
        .sum()
}

/// Entropy of the full canonical identifier, prefix and colon included.
pub fn identifier_entropy(id: &Curie) -> f64 {
    string_entropy(id.as_str())
}

/// True when the first three of the seven digits are `000`.
pub fn leading_000(id: &Curie) -> bool {
    id.digits().starts_with("000")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub term_id: Curie,
    pub pmc_terms: u64,
    pub pmc_identifiers: u64,
    pub annotation_count: u64,
    pub characters: u64,
    pub identifier_entropy: f64,
    pub leaf: bool,
    pub depth: u64,
}

impl FeatureVector {
    /// Derived from `annotation_count`, never stored separately.
    pub fn no_annotation(&self) -> bool {
        self.annotation_count == 0
    }

    pub fn leading_000(&self) -> bool {
        leading_000(&self.term_id)
    }

    /// Predictor values in [`FEATURE_NAMES`] order, booleans as 0/1.
    pub fn values(&self) -> [f64; FEATURE_COUNT] {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        [
            self.pmc_terms as f64,
            self.pmc_identifiers as f64,
            b(self.no_annotation()),
            self.annotation_count as f64,
            self.characters as f64,
            b(self.leading_000()),
            self.identifier_entropy,
            b(self.leaf),
            self.depth as f64,
        ]
    }
}

pub fn build_feature_vector(
    term: &TermRecord,
    g: &OntologyGraph,
    annotations: &AnnotationTable,
    corpus: &mut dyn CorpusLookup,
) -> Result<FeatureVector, FeatureError> {
    let depth = g.depth(&term.id)? as u64;
    let leaf = g.is_leaf(&term.id)?;
    let mut lookup = |query: String| {
        corpus
            .lookup(&query)
            .map_err(|source| FeatureError::MissingCorpusCount { query, source })
    };
    let pmc_terms = lookup(term_query(&term.name))?;
    let pmc_identifiers = lookup(identifier_query(&term.id))?;
    Ok(FeatureVector {
        term_id: term.id.clone(),
        pmc_terms,
        pmc_identifiers,
        annotation_count: annotations.count(&term.id),
        characters: term.name.chars().count() as u64,
        identifier_entropy: identifier_entropy(&term.id),
        leaf,
        depth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OntologyKind {
    #[serde(rename = "HPO")]
    Hpo,
    #[serde(rename = "GO_CC")]
    GoCc,
}

impl OntologyKind {
    /// Guesses the ontology from an identifier prefix.
    pub fn from_prefix(prefix: &str) -> Option<Self> {
        match prefix {
            "HP" => Some(OntologyKind::Hpo),
            "GO" => Some(OntologyKind::GoCc),
            _ => None,
        }
    }
}

impl fmt::Display for OntologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OntologyKind::Hpo => "HPO",
            OntologyKind::GoCc => "GO_CC",
        })
    }
}

impl FromStr for OntologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "HPO" | "HP" => Ok(OntologyKind::Hpo),
            "GO_CC" | "GO" | "GOCC" => Ok(OntologyKind::GoCc),
            other => Err(format!("unknown ontology `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRow {
    pub features: FeatureVector,
    /// Whether the model linked this term to its identifier.
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<DatasetRow>,
    pub ontology: OntologyKind,
    pub model_name: String,
}

/// Terms present on only one side of a feature/probe join.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Reconciliation {
    pub vectors_without_probe: Vec<Curie>,
    pub probes_without_vector: Vec<Curie>,
}

impl Reconciliation {
    pub fn mismatched(&self) -> usize {
        self.vectors_without_probe.len() + self.probes_without_vector.len()
    }
}

/// Inner-joins vectors with probe outcomes on `term_id`. Fails when more
/// than `max_orphans` terms are unmatched.
pub fn build_dataset(
    vectors: Vec<FeatureVector>,
    probes: &[ProbeResult],
    ontology: OntologyKind,
    model_name: &str,
    max_orphans: usize,
) -> Result<(Dataset, Reconciliation), FeatureError> {
    let mut by_id: HashMap<&Curie, bool> = HashMap::with_capacity(probes.len());
    for p in probes {
        if by_id.insert(&p.term_id, p.correct).is_some() {
            return Err(FeatureError::DuplicateTerm(p.term_id.clone()));
        }
    }
    let mut recon = Reconciliation::default();
    let mut rows = Vec::with_capacity(vectors.len());
    let mut seen = HashMap::with_capacity(vectors.len());
    for v in vectors {
        if seen.insert(v.term_id.clone(), ()).is_some() {
            return Err(FeatureError::DuplicateTerm(v.term_id));
        }
        match by_id.get(&v.term_id) {
            Some(&label) => rows.push(DatasetRow { features: v, label }),
            None => recon.vectors_without_probe.push(v.term_id),
        }
    }
    recon.probes_without_vector = probes
        .iter()
        .filter(|p| !seen.contains_key(&p.term_id))
        .map(|p| p.term_id.clone())
        .collect();
    recon.vectors_without_probe.sort();
    recon.probes_without_vector.sort();

    if recon.mismatched() > max_orphans {
        return Err(FeatureError::TooManyOrphans {
            mismatched: recon.mismatched(),
            allowed: max_orphans,
        });
    }
    Ok((
        Dataset {
            rows,
            ontology,
            model_name: model_name.to_string(),
        },
        recon,
    ))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    term_id: Curie,
    pmc_terms: u64,
    pmc_identifiers: u64,
    no_annotation: u8,
    annotation_count: u64,
    characters: u64,
    leading_000: u8,
    identifier_entropy: f64,
    leaf: u8,
    depth: u64,
    label: u8,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// Row-major predictor matrix in [`FEATURE_NAMES`] order.
    pub fn matrix(&self) -> Vec<[f64; FEATURE_COUNT]> {
        self.rows.iter().map(|r| r.features.values()).collect()
    }

    pub fn to_csv(&self) -> Result<String, FeatureError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            let f = &r.features;
            w.serialize(CsvRow {
                term_id: f.term_id.clone(),
                pmc_terms: f.pmc_terms,
                pmc_identifiers: f.pmc_identifiers,
                no_annotation: f.no_annotation() as u8,
                annotation_count: f.annotation_count,
                characters: f.characters,
                leading_000: f.leading_000() as u8,
                identifier_entropy: f.identifier_entropy,
                leaf: f.leaf as u8,
                depth: f.depth,
                label: r.label as u8,
            })?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "term_id",
                "pmc_terms",
                "pmc_identifiers",
                "no_annotation",
                "annotation_count",
                "characters",
                "leading_000",
                "identifier_entropy",
                "leaf",
                "depth",
                "label",
            ])?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Reads a feature table. The ontology is inferred from the identifier
    /// prefix unless `ontology` is given.
    pub fn from_csv(
        text: &str,
        ontology: Option<OntologyKind>,
        model_name: &str,
    ) -> Result<Dataset, FeatureError> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<CsvRow>() {
            let r = rec?;
            rows.push(DatasetRow {
                features: FeatureVector {
                    term_id: r.term_id,
                    pmc_terms: r.pmc_terms,
                    pmc_identifiers: r.pmc_identifiers,
                    annotation_count: r.annotation_count,
                    characters: r.characters,
                    identifier_entropy: r.identifier_entropy,
                    leaf: r.leaf != 0,
                    depth: r.depth,
                },
                label: r.label != 0,
            });
        }
        let ontology = match ontology {
            Some(o) => o,
            None => rows
                .first()
                .and_then(|r| OntologyKind::from_prefix(r.features.term_id.prefix()))
                .ok_or(FeatureError::EmptyTable)?,
        };
        Ok(Dataset {
            rows,
            ontology,
            model_name: model_name.to_string(),
        })
    }
}
