//! Tools for studying why language models fail to link ontology terms to
//! their identifiers: ontology and annotation parsing, literature counts,
//! model probing, feature extraction, statistics and plots.

pub mod annotations;
pub mod config;
pub mod corpus;
pub mod curie;
pub mod features;
pub mod http;
pub mod jsonl;
pub mod ontology;
pub mod probe;
pub mod report;
pub mod stats;
pub mod synthetic;
pub mod zipf;

pub use annotations::{parse_hpoa, parse_swissprot_go, AnnotationTable, GoAspect};
pub use curie::Curie;
pub use features::{Dataset, FeatureVector, OntologyKind, FEATURE_NAMES};
pub use ontology::{parse_obo, OntologyGraph, TermRecord};
pub use probe::ProbeResult;
