//! `is_a` graphs over OBO ontologies and per-term structural metrics.
//!
//! The graph is immutable once built. Obsolete terms are kept in the term
//! table (so lookups can say "obsolete" rather than "unknown") but carry no
//! edges and are never counted by any metric.

mod obo;
mod profile;

pub use obo::{parse_obo, write_normalized_obo};
pub use profile::{ontology_profile, ProfileReport};

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::curie::Curie;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OntologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("is_a cycle: {}", join_ids(.0))]
    Cycle(Vec<Curie>),
    #[error("multiple root candidates ({}); configure an explicit root", join_ids(.0))]
    MultipleRoots(Vec<Curie>),
    #[error("no root candidate: every live term has a parent")]
    NoRoot,
    #[error("ontology has no live terms")]
    Empty,
    #[error("configured root {0} is not a live term")]
    BadRoot(Curie),
    #[error("unknown term {0}")]
    UnknownTerm(Curie),
    #[error("term {0} is obsolete")]
    ObsoleteTerm(Curie),
    #[error("term {0} does not reach the root")]
    Unreachable(Curie),
}

fn join_ids(ids: &[Curie]) -> String {
    ids.iter()
        .map(Curie::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// One `[Term]` stanza.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermRecord {
    pub id: Curie,
    pub name: String,
    pub obsolete: bool,
    /// `is_a` targets, de-duplicated, in file order.
    pub parents: Vec<Curie>,
    pub namespace: Option<String>,
}

impl TermRecord {
    pub fn new(id: Curie, name: impl Into<String>) -> Self {
        TermRecord {
            id,
            name: name.into(),
            obsolete: false,
            parents: Vec::new(),
            namespace: None,
        }
    }

    pub fn with_parents(mut self, parents: impl IntoIterator<Item = Curie>) -> Self {
        for p in parents {
            if !self.parents.contains(&p) {
                self.parents.push(p);
            }
        }
        self
    }
}

/// Things noticed while building a graph that are not fatal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ParseReport {
    /// Live terms with no `is_a` path to the root.
    pub unreachable: Vec<Curie>,
    /// `(child, parent)` pairs whose parent is unknown or obsolete; the edge is dropped.
    pub dangling_edges: Vec<(Curie, Curie)>,
}

#[derive(Debug, Clone)]
pub struct OntologyGraph {
    terms: BTreeMap<Curie, TermRecord>,
    root: Curie,
    // live edges only
    parents: HashMap<Curie, Vec<Curie>>,
    children: HashMap<Curie, Vec<Curie>>,
    depths: HashMap<Curie, usize>,
    report: ParseReport,
}

impl OntologyGraph {
    /// Builds a graph from term records. When `root` is `None` the unique
    /// live term without live parents becomes the root.
    pub fn from_terms(
        records: impl IntoIterator<Item = TermRecord>,
        root: Option<Curie>,
    ) -> Result<Self, OntologyError> {
        let mut terms = BTreeMap::new();
        for rec in records {
            if rec.parents.contains(&rec.id) {
                return Err(OntologyError::Cycle(vec![rec.id.clone(), rec.id.clone()]));
            }
            terms.insert(rec.id.clone(), rec);
        }

        let mut report = ParseReport::default();
        let mut parents: HashMap<Curie, Vec<Curie>> = HashMap::new();
        let mut children: HashMap<Curie, Vec<Curie>> = HashMap::new();
        for rec in terms.values().filter(|t| !t.obsolete) {
            let mut live = Vec::with_capacity(rec.parents.len());
            for p in &rec.parents {
                match terms.get(p) {
                    Some(pt) if !pt.obsolete => {
                        live.push(p.clone());
                        children.entry(p.clone()).or_default().push(rec.id.clone());
                    }
                    _ => report.dangling_edges.push((rec.id.clone(), p.clone())),
                }
            }
            parents.insert(rec.id.clone(), live);
        }
        if parents.is_empty() {
            return Err(OntologyError::Empty);
        }

        if let Some(cycle) = find_cycle(&terms, &parents) {
            return Err(OntologyError::Cycle(cycle));
        }

        let root = match root {
            Some(r) => match terms.get(&r) {
                Some(t) if !t.obsolete => r,
                _ => return Err(OntologyError::BadRoot(r)),
            },
            None => {
                let candidates: Vec<Curie> = terms
                    .keys()
                    .filter(|id| parents.get(*id).is_some_and(Vec::is_empty))
                    .cloned()
                    .collect();
                match candidates.len() {
                    0 => return Err(OntologyError::NoRoot),
                    1 => candidates.into_iter().next().unwrap(),
                    _ => return Err(OntologyError::MultipleRoots(candidates)),
                }
            }
        };

        // BFS from the root over reversed edges gives shortest depths.
        let mut depths = HashMap::new();
        depths.insert(root.clone(), 0usize);
        let mut queue = VecDeque::from([root.clone()]);
        while let Some(id) = queue.pop_front() {
            let d = depths[&id];
            for c in children.get(&id).into_iter().flatten() {
                if !depths.contains_key(c) {
                    depths.insert(c.clone(), d + 1);
                    queue.push_back(c.clone());
                }
            }
        }
        report.unreachable = terms
            .keys()
            .filter(|id| parents.contains_key(*id) && !depths.contains_key(*id))
            .cloned()
            .collect();

        for v in children.values_mut() {
            v.sort();
        }

        Ok(OntologyGraph {
            terms,
            root,
            parents,
            children,
            depths,
            report,
        })
    }

    pub fn root(&self) -> &Curie {
        &self.root
    }

    pub fn report(&self) -> &ParseReport {
        &self.report
    }

    /// Every parsed term, obsolete ones included, in identifier order.
    pub fn all_terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values()
    }

    /// Non-obsolete terms in identifier order.
    pub fn terms(&self) -> impl Iterator<Item = &TermRecord> {
        self.terms.values().filter(|t| !t.obsolete)
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Number of live `is_a` edges.
    pub fn edge_count(&self) -> usize {
        self.parents.values().map(Vec::len).sum()
    }

    pub fn term(&self, id: &Curie) -> Result<&TermRecord, OntologyError> {
        match self.terms.get(id) {
            Some(t) if t.obsolete => Err(OntologyError::ObsoleteTerm(id.clone())),
            Some(t) => Ok(t),
            None => Err(OntologyError::UnknownTerm(id.clone())),
        }
    }

    pub fn parents_of(&self, id: &Curie) -> Result<&[Curie], OntologyError> {
        self.term(id)?;
        Ok(&self.parents[id])
    }

    pub fn children_of(&self, id: &Curie) -> Result<&[Curie], OntologyError> {
        self.term(id)?;
        Ok(self.children.get(id).map(Vec::as_slice).unwrap_or(&[]))
    }

    /// Shortest `is_a` distance to the root.
    pub fn depth(&self, id: &Curie) -> Result<usize, OntologyError> {
        self.term(id)?;
        self.depths
            .get(id)
            .copied()
            .ok_or_else(|| OntologyError::Unreachable(id.clone()))
    }

    pub fn is_leaf(&self, id: &Curie) -> Result<bool, OntologyError> {
        Ok(self.in_degree(id)? == 0)
    }

    pub fn in_degree(&self, id: &Curie) -> Result<usize, OntologyError> {
        Ok(self.children_of(id)?.len())
    }

    /// Distinct terms reachable through parent edges, excluding `id`.
    pub fn ancestor_count(&self, id: &Curie) -> Result<usize, OntologyError> {
        self.term(id)?;
        Ok(self.reach(id, &self.parents).len() - 1)
    }

    /// Distinct descendants of `id`, including `id` itself.
    pub fn subgraph_size(&self, id: &Curie) -> Result<usize, OntologyError> {
        self.term(id)?;
        Ok(self.reach(id, &self.children).len())
    }

    fn reach<'a>(
        &'a self,
        start: &'a Curie,
        edges: &'a HashMap<Curie, Vec<Curie>>,
    ) -> BTreeSet<&'a Curie> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            for next in edges.get(id).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        seen
    }

    /// The sub-ontology of the root and its descendants, e.g. the cellular
    /// component branch of a full GO release.
    pub fn restrict_to_root(&self) -> OntologyGraph {
        let keep = self.reach(&self.root, &self.children);
        let records = keep.into_iter().map(|id| {
            let mut rec = self.terms[id].clone();
            if *id == self.root {
                rec.parents.clear();
            }
            rec
        });
        // a descendant set of a valid DAG is itself a valid DAG rooted here
        OntologyGraph::from_terms(records.collect::<Vec<_>>(), Some(self.root.clone()))
            .expect("descendant closure of a valid graph is valid")
    }
}

/// Returns one cycle (first node repeated at the end) if the live edges have any.
fn find_cycle(
    terms: &BTreeMap<Curie, TermRecord>,
    parents: &HashMap<Curie, Vec<Curie>>,
) -> Option<Vec<Curie>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    let mut marks: HashMap<&Curie, Mark> = HashMap::new();
    for start in terms.keys().filter(|id| parents.contains_key(*id)) {
        if marks.contains_key(start) {
            continue;
        }
        // iterative DFS; the path stack mirrors the Active marks
        let mut path: Vec<(&Curie, usize)> = vec![(start, 0)];
        marks.insert(start, Mark::Active);
        while let Some((node, next)) = path.last_mut() {
            let ps = &parents[*node];
            if *next < ps.len() {
                let p = &ps[*next];
                *next += 1;
                match marks.get(p) {
                    Some(Mark::Active) => {
                        let pos = path.iter().position(|(n, _)| *n == p).unwrap();
                        let mut cycle: Vec<Curie> =
                            path[pos..].iter().map(|(n, _)| (*n).clone()).collect();
                        cycle.push(p.clone());
                        return Some(cycle);
                    }
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(p, Mark::Active);
                        path.push((p, 0));
                    }
                }
            } else {
                marks.insert(*node, Mark::Done);
                path.pop();
            }
        }
    }
    None
}
