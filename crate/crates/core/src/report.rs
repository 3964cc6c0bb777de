//! Accuracy broken down by annotation status and annotation-count bins.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::curie::Curie;
use crate::features::{Dataset, OntologyKind};

/// Accuracy inside and outside the ontology desert (terms never annotated).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesertReport {
    pub ontology: OntologyKind,
    pub model_name: String,
    pub total: usize,
    pub unused_count: usize,
    pub unused_fraction: f64,
    /// `None` when there are no unused terms.
    pub correct_among_unused: Option<f64>,
    /// `None` when every term is unused.
    pub correct_among_used: Option<f64>,
    pub unused: Vec<Curie>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn desert_report(ds: &Dataset) -> DesertReport {
    let mut unused = Vec::new();
    let (mut unused_correct, mut used, mut used_correct) = (0, 0, 0);
    for r in &ds.rows {
        if r.features.no_annotation() {
            unused.push(r.features.term_id.clone());
            unused_correct += r.label as usize;
        } else {
            used += 1;
            used_correct += r.label as usize;
        }
    }
    unused.sort();
    DesertReport {
        ontology: ds.ontology,
        model_name: ds.model_name.clone(),
        total: ds.len(),
        unused_count: unused.len(),
        unused_fraction: ratio(unused.len(), ds.len()).unwrap_or(0.0),
        correct_among_unused: ratio(unused_correct, unused.len()),
        correct_among_used: ratio(used_correct, used),
        unused,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl DesertReport {
    pub fn summary_csv(&self) -> String {
        format!(
            "ontology,model,total,unused_count,unused_fraction,correct_among_unused,correct_among_used\n\
             {},{},{},{},{:.6},{},{}\n",
            self.ontology,
            self.model_name,
            self.total,
            self.unused_count,
            self.unused_fraction,
            opt(self.correct_among_unused),
            opt(self.correct_among_used)
        )
    }

    /// One unused CURIE per line.
    pub fn unused_list(&self) -> String {
        self.unused.iter().map(|c| format!("{c}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinError {
    #[error("bin edges must start at 0 and strictly increase")]
    NotIncreasing,
    #[error("bad bin edge `{0}`")]
    BadEdge(String),
}

/// Lower bounds of annotation-count bins. The default is a dedicated zero
/// bin followed by power-of-two buckets: 0, 1, 2-3, 4-7, ...
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum BinSpec {
    #[default]
    PowersOfTwo,
    /// Explicit lower bounds. The last bin is open-ended.
    Edges(Vec<u64>),
}

impl BinSpec {
    pub fn from_edges(edges: Vec<u64>) -> Result<Self, BinError> {
        if edges.first() != Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(BinError::NotIncreasing);
        }
        Ok(BinSpec::Edges(edges))
    }

    /// `(lower, inclusive upper)` for each bin, covering `0..=max_count`.
    fn bounds(&self, max_count: u64) -> Vec<(u64, Option<u64>)> {
        match self {
            BinSpec::PowersOfTwo => {
                let mut out = vec![(0, Some(0))];
                let mut lo = 1u64;
                while lo <= max_count.max(1) {
                    let hi = lo.saturating_mul(2) - 1;
                    out.push((lo, Some(hi)));
                    if hi == u64::MAX {
                        break;
                    }
                    lo = hi + 1;
                }
                out
            }
            BinSpec::Edges(edges) => edges
                .iter()
                .enumerate()
                .map(|(i, &lo)| (lo, edges.get(i + 1).map(|next| next - 1)))
                .collect(),
        }
    }
}

impl FromStr for BinSpec {
    type Err = BinError;

    /// `pow2` or a comma-separated list of lower bounds such as `0,1,5,20`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("pow2") {
            return Ok(BinSpec::PowersOfTwo);
        }
        let edges = s
            .split(',')
            .map(|e| {
                e.trim()
                    .parse::<u64>()
                    .map_err(|_| BinError::BadEdge(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        BinSpec::from_edges(edges)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinRow {
    pub label: String,
    pub lower: u64,
    pub upper: Option<u64>,
    pub total: usize,
    pub correct: usize,
    pub accuracy: Option<f64>,
}

fn bin_label(lo: u64, hi: Option<u64>) -> String {
    match hi {
        Some(h) if h == lo => lo.to_string(),
        Some(h) => format!("{lo}-{h}"),
        None => format!("{lo}+"),
    }
}

/// Per-bin totals and accuracy. Empty bins are kept so the axis stays
/// contiguous.
pub fn accuracy_bins(ds: &Dataset, spec: &BinSpec) -> Vec<BinRow> {
    let max = ds
        .rows
        .iter()
        .map(|r| r.features.annotation_count)
        .max()
        .unwrap_or(0);
    let bounds = spec.bounds(max);
    let mut rows: Vec<BinRow> = bounds
        .iter()
        .map(|&(lo, hi)| BinRow {
            label: bin_label(lo, hi),
            lower: lo,
            upper: hi,
            total: 0,
            correct: 0,
            accuracy: None,
        })
        .collect();
    for r in &ds.rows {
        let c = r.features.annotation_count;
        // the last bin whose lower bound is <= c
        let i = bounds.partition_point(|&(lo, _)| lo <= c) - 1;
        rows[i].total += 1;
        rows[i].correct += r.label as usize;
    }
    for row in &mut rows {
        row.accuracy = ratio(row.correct, row.total);
    }
    rows
}

/// Whether accuracy never drops from one non-empty bin to the next.
pub fn accuracy_non_decreasing(rows: &[BinRow]) -> bool {
    let accs: Vec<f64> = rows.iter().filter_map(|r| r.accuracy).collect();
    accs.windows(2).all(|w| w[0] <= w[1])
}

pub fn bins_csv(ontology: OntologyKind, model_name: &str, rows: &[BinRow]) -> String {
    let mut out = String::from("ontology,model,bin,lower,upper,total,correct,accuracy\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{ontology},{model_name},{},{},{},{},{},{}",
            r.label,
            r.lower,
            r.upper.map_or_else(String::new, |u| u.to_string()),
            r.total,
            r.correct,
            opt(r.accuracy)
        );
    }
    out
}
