//! Rank–frequency data over annotation counts, with seeded sampling and
//! jitter, rendered as CSV and standalone SVG.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::annotations::AnnotationTable;
use crate::curie::Curie;

/// Added to every count before taking log10, so zero maps to -1.
pub const COUNT_OFFSET: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZipfError {
    #[error("no terms to rank")]
    NoTerms,
    #[error("no probe outcome for annotated term {0}")]
    MissingProbe(Curie),
    #[error("nothing to plot")]
    NoPoints,
    #[error("jitter amplitude must be finite and non-negative, got {0}")]
    BadJitter(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankedTerm {
    pub term_id: Curie,
    pub rank: usize,
    pub count: u64,
}

/// Orders terms by count, highest first, breaking ties by CURIE.
pub fn rank_terms(table: &AnnotationTable, terms: &[Curie]) -> Result<Vec<RankedTerm>, ZipfError> {
    rank_counts(terms.iter().map(|t| (t.clone(), table.count(t))))
}

pub fn rank_counts(
    counts: impl IntoIterator<Item = (Curie, u64)>,
) -> Result<Vec<RankedTerm>, ZipfError> {
    let mut v: Vec<(Curie, u64)> = counts.into_iter().collect();
    if v.is_empty() {
        return Err(ZipfError::NoTerms);
    }
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(v.into_iter()
        .enumerate()
        .map(|(i, (term_id, count))| RankedTerm {
            term_id,
            rank: i + 1,
            count,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Category {
    NoAnnotation,
    Correct,
    Incorrect,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::NoAnnotation,
        Category::Correct,
        Category::Incorrect,
    ];

    pub fn color(self) -> &'static str {
        match self {
            Category::NoAnnotation => "red",
            Category::Correct => "green",
            Category::Incorrect => "blue",
        }
    }

    fn legend(self) -> &'static str {
        match self {
            Category::NoAnnotation => "No annotations",
            Category::Correct => "Correctly linked",
            Category::Incorrect => "Incorrectly linked",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::NoAnnotation => "NO_ANNOTATION",
            Category::Correct => "CORRECT",
            Category::Incorrect => "INCORRECT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZipfPoint {
    pub term_id: Curie,
    pub rank: usize,
    pub count: u64,
    pub x: f64,
    pub y: f64,
    pub category: Category,
    pub x_jittered: f64,
    pub y_jittered: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfOptions {
    pub sample_n: usize,
    pub seed: u64,
    pub jitter: f64,
}

impl Default for ZipfOptions {
    fn default() -> Self {
        ZipfOptions {
            sample_n: 2000,
            seed: 0,
            jitter: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfSample {
    /// Sorted by rank.
    pub points: Vec<ZipfPoint>,
    /// Set when fewer terms existed than were requested.
    pub truncated_from: Option<usize>,
}

/// Samples `sample_n` ranked terms without replacement and colours them by
/// annotation status and probe outcome. `correct` maps term to whether it
/// was linked; it only needs entries for annotated terms in the sample.
pub fn zipf_points(
    ranked: &[RankedTerm],
    correct: &HashMap<Curie, bool>,
    opts: ZipfOptions,
) -> Result<ZipfSample, ZipfError> {
    if !(opts.jitter.is_finite() && opts.jitter >= 0.0) {
        return Err(ZipfError::BadJitter(opts.jitter));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut picked, truncated_from) = if opts.sample_n >= ranked.len() {
        let t = (opts.sample_n > ranked.len()).then_some(opts.sample_n);
        if t.is_some() {
            log::warn!(
                "requested {} points but only {} terms exist; using all",
                opts.sample_n,
                ranked.len()
            );
        }
        ((0..ranked.len()).collect::<Vec<_>>(), t)
    } else {
        (
            index::sample(&mut rng, ranked.len(), opts.sample_n).into_vec(),
            None,
        )
    };
    picked.sort_unstable_by_key(|&i| ranked[i].rank);

    let a = opts.jitter;
    let mut points = Vec::with_capacity(picked.len());
    for i in picked {
        let r = &ranked[i];
        let category = if r.count == 0 {
            Category::NoAnnotation
        } else {
            match correct.get(&r.term_id) {
                Some(true) => Category::Correct,
                Some(false) => Category::Incorrect,
                None => return Err(ZipfError::MissingProbe(r.term_id.clone())),
            }
        };
        let x = (r.rank as f64).log10();
        let y = if r.count == 0 {
            -1.0
        } else {
            (r.count as f64 + COUNT_OFFSET).log10()
        };
        let (jx, jy) = if a > 0.0 {
            (rng.random_range(-a..=a), rng.random_range(-a..=a))
        } else {
            (0.0, 0.0)
        };
        points.push(ZipfPoint {
            term_id: r.term_id.clone(),
            rank: r.rank,
            count: r.count,
            x,
            y,
            category,
            x_jittered: x + jx,
            y_jittered: y + jy,
        });
    }
    Ok(ZipfSample {
        points,
        truncated_from,
    })
}

pub fn points_csv(points: &[ZipfPoint]) -> String {
    let mut out = String::from("term_id,rank,count,x,y,category,x_jittered,y_jittered\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{:.6},{:.6}",
            p.term_id, p.rank, p.count, p.x, p.y, p.category, p.x_jittered, p.y_jittered
        );
    }
    out
}

/// Share of red points among those ranked beyond the median rank of red
/// points. Large values mean unannotated terms dominate the tail.
pub fn tail_dominance(points: &[ZipfPoint]) -> Option<f64> {
    let mut red: Vec<usize> = points
        .iter()
        .filter(|p| p.category == Category::NoAnnotation)
        .map(|p| p.rank)
        .collect();
    if red.is_empty() {
        return None;
    }
    red.sort_unstable();
    let median = red[red.len() / 2];
    let tail: Vec<&ZipfPoint> = points.iter().filter(|p| p.rank > median).collect();
    if tail.is_empty() {
        return None;
    }
    let n_red = tail
        .iter()
        .filter(|p| p.category == Category::NoAnnotation)
        .count();
    Some(n_red as f64 / tail.len() as f64)
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 190.0;
const MARGIN_Y: f64 = 50.0;

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let pad = ((hi - lo) * 0.05).max(0.1);
    (lo - pad, hi + pad)
}

/// Scatter plot of the jittered coordinates with axes and a legend.
pub fn render_svg(points: &[ZipfPoint], title: &str) -> Result<String, ZipfError> {
    if points.is_empty() {
        return Err(ZipfError::NoPoints);
    }
    let (x0, x1) = padded_range(points.iter().map(|p| p.x_jittered));
    let (y0, y1) = padded_range(points.iter().map(|p| p.y_jittered));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_Y + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="25" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for tick in integer_ticks(x0, x1) {
        let x = sx(tick);
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{tick}</text>"#,
            MARGIN_Y + plot_h + 16.0
        );
    }
    for tick in integer_ticks(y0, y1) {
        let y = sy(tick);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">log10(rank)</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">log10(count)</text>"#,
        MARGIN_Y + plot_h / 2.0,
        MARGIN_Y + plot_h / 2.0
    );

    let _ = writeln!(s, r#"<g class="markers" fill-opacity="0.6">"#);
    for p in points {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
            sx(p.x_jittered),
            sy(p.y_jittered),
            p.category.color()
        );
    }
    let _ = writeln!(s, "</g>");

    let lx = WIDTH - MARGIN_RIGHT + 15.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, c) in Category::ALL.iter().enumerate() {
        let ly = MARGIN_Y + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry"><rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            ly - 9.0,
            c.color(),
            lx + 16.0,
            ly,
            c.legend()
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

fn integer_ticks(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (lo.ceil() as i64..=hi.floor() as i64).map(|v| v as f64)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
