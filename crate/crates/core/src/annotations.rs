//! Usage counts from curated annotation corpora.
//!
//! Two sources are understood: the HPO disease annotation TSV
//! (`phenotype.hpoa`) and GO cross-references in the UniProtKB/Swiss-Prot
//! flat file (`uniprot_sprot.dat`). Duplicate rows are counted, not merged.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::curie::Curie;
use crate::ontology::OntologyGraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnnotationError {
    #[error("annotation header has no `{0}` column")]
    MissingColumn(&'static str),
    #[error("unknown GO aspect `{0}` (expected C, F or P)")]
    BadAspect(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AnnotationSource {
    #[default]
    Hpoa,
    SwissprotGo,
}

/// GO aspect code as written in the third field of a `DR   GO;` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GoAspect {
    Component,
    Function,
    Process,
}

impl GoAspect {
    pub fn code(self) -> char {
        match self {
            GoAspect::Component => 'C',
            GoAspect::Function => 'F',
            GoAspect::Process => 'P',
        }
    }

    fn from_code(c: char) -> Option<Self> {
        match c {
            'C' => Some(GoAspect::Component),
            'F' => Some(GoAspect::Function),
            'P' => Some(GoAspect::Process),
            _ => None,
        }
    }
}

impl FromStr for GoAspect {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.trim().chars();
        match (chars.next().map(|c| c.to_ascii_uppercase()), chars.next()) {
            (Some(c), None) => GoAspect::from_code(c),
            _ => None,
        }
        .ok_or_else(|| AnnotationError::BadAspect(s.to_string()))
    }
}

impl fmt::Display for GoAspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnnotationTable {
    counts: BTreeMap<Curie, u64>,
    total_entries: u64,
    source: AnnotationSource,
    skipped: Vec<SkippedLine>,
}

impl AnnotationTable {
    pub fn new(source: AnnotationSource) -> Self {
        AnnotationTable {
            source,
            ..Self::default()
        }
    }

    /// Usage count of `id`, zero when never seen.
    pub fn count(&self, id: &Curie) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<Curie, u64> {
        &self.counts
    }

    pub fn total_entries(&self) -> u64 {
        self.total_entries
    }

    pub fn source(&self) -> AnnotationSource {
        self.source
    }

    pub fn skipped(&self) -> &[SkippedLine] {
        &self.skipped
    }

    pub fn record(&mut self, id: Curie) {
        *self.counts.entry(id).or_insert(0) += 1;
    }

    /// Annotated identifiers that are not live terms of `g`.
    pub fn unknown_ids(&self, g: &OntologyGraph) -> Vec<Curie> {
        self.counts
            .keys()
            .filter(|id| g.term(id).is_err())
            .cloned()
            .collect()
    }

    /// Two-column `curie,count` CSV, sorted by identifier.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("curie,count\n");
        for (id, n) in &self.counts {
            let _ = writeln!(out, "{id},{n}");
        }
        out
    }

    pub fn skip_report(&self) -> String {
        let mut out = format!(
            "source: {:?}\nentries: {}\nskipped: {}\n",
            self.source,
            self.total_entries,
            self.skipped.len()
        );
        for s in &self.skipped {
            let _ = writeln!(out, "line {}: {}", s.line, s.reason);
        }
        out
    }
}

const HPO_ID_COLUMN: &str = "hpo_id";

/// Counts rows per `hpo_id` in an HPOA file.
pub fn parse_hpoa(text: &str) -> Result<AnnotationTable, AnnotationError> {
    let mut table = AnnotationTable::new(AnnotationSource::Hpoa);
    let mut header: Option<(&str, usize)> = None;

    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let Some((header_line, col)) = header else {
            let col = line
                .split('\t')
                .position(|f| f.trim() == HPO_ID_COLUMN)
                .ok_or(AnnotationError::MissingColumn(HPO_ID_COLUMN))?;
            header = Some((line, col));
            continue;
        };
        // concatenated files repeat their header
        if line == header_line {
            continue;
        }
        table.total_entries += 1;
        let field = line.split('\t').nth(col).unwrap_or("").trim();
        match field.parse::<Curie>() {
            Ok(id) => table.record(id),
            Err(e) => table.skipped.push(SkippedLine {
                line: idx + 1,
                reason: e.to_string(),
            }),
        }
    }
    Ok(table)
}

/// Counts `DR   GO;` cross-references in a Swiss-Prot flat file, optionally
/// restricted to one aspect.
pub fn parse_swissprot_go(text: &str, aspect: Option<GoAspect>) -> AnnotationTable {
    let mut table = AnnotationTable::new(AnnotationSource::SwissprotGo);
    for (idx, line) in text.lines().enumerate() {
        if !line.starts_with("DR   GO;") {
            continue;
        }
        let mut fields = line.split(';').map(str::trim).skip(1);
        let parsed = fields
            .next()
            .ok_or_else(|| "missing GO identifier".to_string())
            .and_then(|id| id.parse::<Curie>().map_err(|e| e.to_string()))
            .and_then(|id| {
                let term_field = fields.next().unwrap_or("");
                match term_field.chars().next().and_then(GoAspect::from_code) {
                    Some(a) if term_field[1..].starts_with(':') => Ok((id, a)),
                    _ => Err(format!("bad aspect field `{term_field}`")),
                }
            });
        match parsed {
            Ok((id, a)) => {
                if aspect.is_none_or(|want| want == a) {
                    table.total_entries += 1;
                    table.record(id);
                }
            }
            Err(reason) => table.skipped.push(SkippedLine {
                line: idx + 1,
                reason,
            }),
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: &str) -> Curie {
        s.parse().unwrap()
    }

    const HPOA: &str = "\
#description: test
#version: 2025-01-16
database_id\tdisease_name\tqualifier\thpo_id\treference\tevidence
OMIM:1\tA\t\tHP:0001251\tPMID:1\tPCS
OMIM:2\tB\t\tHP:0001251\tPMID:2\tPCS
OMIM:3\tC\t\tHP:0000118\tPMID:3\tIEA
OMIM:3\tC\t\tHP:0001251\tPMID:3\tIEA
";

    const DAT: &str = "\
ID   TEST_HUMAN              Reviewed;         100 AA.
DR   GO; GO:0005737; C:cytoplasm; IEA:UniProtKB-SubCell.
DR   GO; GO:0005737; C:cytoplasm; IDA:UniProtKB.
DR   GO; GO:0003674; F:molecular_function; ND:GO_Central.
DR   Pfam; PF00001; 7tm_1; 1.
//
";

    #[test]
    fn hpoa_fixture_counts() {
        let t = parse_hpoa(HPOA).unwrap();
        assert_eq!(t.count(&c("HP:0001251")), 3);
        assert_eq!(t.count(&c("HP:0000118")), 1);
        assert_eq!(t.total_entries(), 4);
        assert_eq!(t.counts().len(), 2);
        assert!(t.skipped().is_empty());
    }

    #[test]
    fn hpoa_empty_data() {
        let t = parse_hpoa("#c\ndatabase_id\thpo_id\n").unwrap();
        assert_eq!(t.total_entries(), 0);
        assert!(t.counts().is_empty());
    }

    #[test]
    fn hpoa_missing_column() {
        assert_eq!(
            parse_hpoa("database_id\tterm\nOMIM:1\tHP:0000001\n").unwrap_err(),
            AnnotationError::MissingColumn("hpo_id")
        );
    }

    #[test]
    fn hpoa_bad_row_is_skipped() {
        let t = parse_hpoa("database_id\thpo_id\nOMIM:1\tHP:12\nOMIM:2\tHP:0000001\n").unwrap();
        assert_eq!(t.total_entries(), 2);
        assert_eq!(t.count(&c("HP:0000001")), 1);
        assert_eq!(t.skipped().len(), 1);
        assert_eq!(t.skipped()[0].line, 2);
        assert!(t.skip_report().contains("line 2"));
    }

    #[test]
    fn swissprot_aspect_filter() {
        let cc = parse_swissprot_go(DAT, Some(GoAspect::Component));
        assert_eq!(cc.count(&c("GO:0005737")), 2);
        assert_eq!(cc.count(&c("GO:0003674")), 0);
        assert_eq!(cc.total_entries(), 2);
        assert_eq!(cc.counts().len(), 1);

        let all = parse_swissprot_go(DAT, None);
        assert_eq!(all.total_entries(), 3);
        assert_eq!(all.count(&c("GO:0003674")), 1);
    }

    #[test]
    fn swissprot_malformed_lines_skipped() {
        let t = parse_swissprot_go(
            "DR   GO; GO:00057; C:x; IEA.\nDR   GO; GO:0005737; X:x; IEA.\n",
            None,
        );
        assert_eq!(t.total_entries(), 0);
        assert_eq!(t.skipped().len(), 2);
    }

    #[test]
    fn annotation_count_defaults_to_zero() {
        assert_eq!(AnnotationTable::default().count(&c("GO:0005737")), 0);
        assert_eq!(
            parse_swissprot_go(DAT, Some(GoAspect::Component)).count(&c("GO:0005737")),
            2
        );
    }

    #[test]
    fn csv_output() {
        let t = parse_hpoa(HPOA).unwrap();
        assert_eq!(t.to_csv(), "curie,count\nHP:0000118,1\nHP:0001251,3\n");
    }

    #[test]
    fn aspect_from_str() {
        assert_eq!("c".parse::<GoAspect>().unwrap(), GoAspect::Component);
        assert_eq!("P".parse::<GoAspect>().unwrap(), GoAspect::Process);
        assert!("CC".parse::<GoAspect>().is_err());
    }

    fn dat_line() -> impl Strategy<Value = String> {
        (0u32..40, prop::sample::select(vec!['C', 'F', 'P']))
            .prop_map(|(n, a)| format!("DR   GO; GO:{n:07}; {a}:something; IEA:X.\n"))
    }

    proptest! {
        #[test]
        fn aspect_partition(lines in prop::collection::vec(dat_line(), 0..50)) {
            let text: String = lines.concat();
            let all = parse_swissprot_go(&text, None);
            let parts: Vec<_> = [GoAspect::Component, GoAspect::Function, GoAspect::Process]
                .into_iter()
                .map(|a| parse_swissprot_go(&text, Some(a)))
                .collect();
            for (id, n) in all.counts() {
                prop_assert_eq!(*n, parts.iter().map(|p| p.count(id)).sum::<u64>());
            }
            prop_assert_eq!(all.total_entries(), parts.iter().map(|p| p.total_entries()).sum::<u64>());
        }

        #[test]
        fn deterministic(lines in prop::collection::vec(dat_line(), 0..30)) {
            let text: String = lines.concat();
            prop_assert_eq!(parse_swissprot_go(&text, None), parse_swissprot_go(&text, None));
        }
    }
}
