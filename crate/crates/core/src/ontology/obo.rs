//! OBO 1.2/1.4 flat-file reading, `[Term]` stanzas and `is_a` lines only.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{OntologyError, OntologyGraph, TermRecord};
use crate::curie::Curie;

#[derive(Default)]
struct Stanza {
    start_line: usize,
    id: Option<Curie>,
    name: Option<String>,
    namespace: Option<String>,
    obsolete: bool,
    parents: Vec<Curie>,
}

impl Stanza {
    fn finish(self, seen: &mut HashSet<Curie>) -> Result<TermRecord, OntologyError> {
        let id = self.id.ok_or_else(|| OntologyError::Parse {
            line: self.start_line,
            message: "[Term] stanza has no id".into(),
        })?;
        let name = self.name.unwrap_or_default();
        if !self.obsolete && name.trim().is_empty() {
            return Err(OntologyError::Parse {
                line: self.start_line,
                message: format!("term {id} has no name"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(OntologyError::Parse {
                line: self.start_line,
                message: format!("duplicate term id {id}"),
            });
        }
        Ok(TermRecord {
            id,
            name,
            obsolete: self.obsolete,
            parents: Vec::new(),
            namespace: self.namespace,
        }
        .with_parents(self.parents))
    }
}

/// Cuts a tag value at its first unescaped `!` and drops a trailing
/// `{...}` qualifier block.
fn strip_value(raw: &str) -> &str {
    let mut prev = '\0';
    let mut end = raw.len();
    for (i, ch) in raw.char_indices() {
        if ch == '!' && prev != '\\' {
            end = i;
            break;
        }
        prev = ch;
    }
    let mut v = raw[..end].trim();
    if v.ends_with('}') {
        if let Some(open) = v.rfind('{') {
            v = v[..open].trim_end();
        }
    }
    v
}

fn parse_curie(value: &str, line: usize) -> Result<Curie, OntologyError> {
    value.parse().map_err(|e| OntologyError::Parse {
        line,
        message: format!("{e}"),
    })
}

/// Parses OBO text into an `is_a` graph. `root` overrides root autodetection.
pub fn parse_obo(text: &str, root: Option<Curie>) -> Result<OntologyGraph, OntologyError> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut current: Option<Stanza> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.starts_with('[') && line.ends_with(']') {
            if let Some(st) = current.take() {
                records.push(st.finish(&mut seen)?);
            }
            if line == "[Term]" {
                current = Some(Stanza {
                    start_line: line_no,
                    ..Stanza::default()
                });
            }
            continue;
        }
        let Some(st) = current.as_mut() else {
            continue;
        };
        if line.is_empty() || line.starts_with('!') {
            continue;
        }
        let Some((tag, value)) = line.split_once(':') else {
            return Err(OntologyError::Parse {
                line: line_no,
                message: format!("expected `tag: value`, found `{line}`"),
            });
        };
        let value = value.trim();
        match tag.trim() {
            "id" => {
                if st.id.is_some() {
                    return Err(OntologyError::Parse {
                        line: line_no,
                        message: "stanza has more than one id".into(),
                    });
                }
                st.id = Some(parse_curie(strip_value(value), line_no)?);
            }
            // names may legitimately contain `!`
            "name" => st.name = Some(value.to_string()),
            "namespace" => st.namespace = Some(strip_value(value).to_string()),
            "is_obsolete" => st.obsolete = strip_value(value) == "true",
            "is_a" => {
                let target = parse_curie(strip_value(value), line_no)?;
                st.parents.push(target);
            }
            _ => {}
        }
    }
    if let Some(st) = current.take() {
        records.push(st.finish(&mut seen)?);
    }

    OntologyGraph::from_terms(records, root)
}

/// Writes the live part of a graph as a minimal, sorted OBO document.
///
/// Parsing the output with the same root reproduces the same graph.
pub fn write_normalized_obo(g: &OntologyGraph) -> String {
    let mut out = String::from("format-version: 1.2\n");
    for t in g.terms() {
        let _ = write!(out, "\n[Term]\nid: {}\nname: {}\n", t.id, t.name);
        let mut parents = g.parents_of(&t.id).expect("live term").to_vec();
        parents.sort();
        for p in parents {
            let _ = writeln!(out, "is_a: {p}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Curie {
        s.parse().unwrap()
    }

    const CHAIN: &str = "\
format-version: 1.2
ontology: hp

[Term]
id: HP:0000001
name: All

[Term]
id: HP:0000118
name: Phenotypic abnormality
is_a: HP:0000001 ! All

[Term]
id: HP:0001251
name: Ataxia
is_a: HP:0000118 {source=\"x\"} ! Phenotypic abnormality
relationship: part_of HP:0000001

[Typedef]
id: part_of
name: part of
";

    #[test]
    fn single_term_file() {
        let g = parse_obo("[Term]\nid: HP:0000001\nname: All\n", None).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.root(), &c("HP:0000001"));
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn chain_file() {
        let g = parse_obo(CHAIN, None).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.root(), &c("HP:0000001"));
        assert_eq!(g.depth(&c("HP:0001251")).unwrap(), 2);
        assert_eq!(g.term(&c("HP:0001251")).unwrap().name, "Ataxia");
    }

    #[test]
    fn missing_id_reports_stanza_line() {
        let text = "[Term]\nid: HP:0000001\nname: All\n\n[Term]\nname: orphan\n";
        match parse_obo(text, None).unwrap_err() {
            OntologyError::Parse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_is_a_target_reports_line() {
        let text = "[Term]\nid: HP:0000001\nname: All\nis_a: owl:Thing\n";
        match parse_obo(text, None).unwrap_err() {
            OntologyError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obsolete_stanza_without_parents() {
        let text = "\
[Term]
id: HP:0000001
name: All

[Term]
id: HP:0000005
name: obsolete Mode of inheritance
is_obsolete: true
alt_id: HP:0000006
";
        let g = parse_obo(text, None).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.all_terms().count(), 2);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = "[Term]\nid: HP:0000001\nname: a\n[Term]\nid: HP:0000001\nname: b\n";
        assert!(matches!(
            parse_obo(text, None),
            Err(OntologyError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn cycle_in_file() {
        let text = "\
[Term]
id: HP:0000001
name: root
[Term]
id: HP:0000002
name: a
is_a: HP:0000001
is_a: HP:0000003
[Term]
id: HP:0000003
name: b
is_a: HP:0000002
";
        assert!(matches!(
            parse_obo(text, None),
            Err(OntologyError::Cycle(_))
        ));
    }

    #[test]
    fn strip_value_handles_comments_and_qualifiers() {
        assert_eq!(strip_value("HP:0000001 ! All"), "HP:0000001");
        assert_eq!(strip_value("HP:0000001 {a=\"b\"} ! All"), "HP:0000001");
        assert_eq!(strip_value("true"), "true");
        assert_eq!(strip_value(r"a\!b ! c"), r"a\!b");
    }

    #[test]
    fn normalized_roundtrip() {
        let g = parse_obo(CHAIN, None).unwrap();
        let text = write_normalized_obo(&g);
        let again = parse_obo(&text, None).unwrap();
        assert_eq!(write_normalized_obo(&again), text);
        assert_eq!(again.len(), g.len());
        assert_eq!(again.edge_count(), g.edge_count());
    }
}
