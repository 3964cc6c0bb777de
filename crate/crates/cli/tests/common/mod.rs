//! Fixture ontology, annotations and pre-filled caches for offline runs of
//! the `idlink` binary.
#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flate2::write::GzEncoder;
use idlink_core::corpus::{identifier_query, term_query};
use idlink_core::probe::build_prompt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const MODEL: &str = "fixture-model";
const STAMP: &str = "2025-01-01T00:00:00Z";

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub ontology: PathBuf,
    pub annotations: PathBuf,
    pub corpus_cache: PathBuf,
    pub probe_cache: PathBuf,
}

/// Term `i`; a third of the identifiers start with 000.
pub fn term_id(i: usize) -> String {
    let digits = if i.is_multiple_of(3) {
        i
    } else {
        1_000_000 * (i % 9 + 1) + i
    };
    format!("HP:{digits:07}")
}

fn label(i: usize) -> String {
    const WORDS: [&str; 8] = [
        "abnormal", "cardiac", "renal", "ocular", "gait", "tremor", "digit", "muscle",
    ];
    if i == 0 {
        return "All".into();
    }
    let n = 1 + i % 3;
    let words: Vec<&str> = (0..n)
        .map(|k| WORDS[(i * 7 + k * 3) % WORDS.len()])
        .collect();
    format!("{} {i}", words.join(" "))
}

/// Writes an `n`-term ontology (gzipped), annotations and both caches.
/// Terms listed in `unprobed` get no cached model reply.
pub fn build(n: usize, seed: u64, unprobed: &[usize]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut obo = String::from("format-version: 1.2\nontology: hp\n\n");
    for i in 0..n {
        obo.push_str(&format!("[Term]\nid: {}\nname: {}\n", term_id(i), label(i)));
        if i > 0 {
            let mut parents = vec![rng.random_range(0..i)];
            if i > 3 && rng.random_bool(0.3) {
                parents.push(rng.random_range(0..i));
            }
            parents.sort();
            parents.dedup();
            for p in parents {
                obo.push_str(&format!("is_a: {} ! {}\n", term_id(p), label(p)));
            }
        }
        obo.push('\n');
    }
    let ontology = dir.path().join("fixture.obo.gz");
    let mut gz = GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(obo.as_bytes()).unwrap();
    fs::write(&ontology, gz.finish().unwrap()).unwrap();

    // heavy-tailed annotation counts with many unused terms
    let mut counts = vec![0u64; n];
    let mut hpoa = String::from("#description: fixture\ndatabase_id\tdisease_name\tqualifier\thpo_id\treference\tevidence\n");
    for _ in 0..4 * n {
        let t = (rng.random::<f64>().powi(3) * n as f64 * 1.6) as usize;
        if t < n {
            counts[t] += 1;
            hpoa.push_str(&format!(
                "OMIM:{}\tx\t\t{}\tPMID:1\tTAS\n",
                rng.random_range(1..9999),
                term_id(t)
            ));
        }
    }
    let annotations = dir.path().join("fixture.hpoa");
    fs::write(&annotations, hpoa).unwrap();

    let mut corpus = String::new();
    for i in 0..n {
        let id: idlink_core::Curie = term_id(i).parse().unwrap();
        for (q, count) in [
            (term_query(&label(i)), rng.random_range(0..5000u64)),
            (
                identifier_query(&id),
                if rng.random_bool(0.7) {
                    0
                } else {
                    rng.random_range(1..40)
                },
            ),
        ] {
            let rec = json!({"query": q, "count": count, "retrieved_at": STAMP});
            corpus.push_str(&format!("{rec}\n"));
        }
    }
    let corpus_cache = dir.path().join("corpus_cache.jsonl");
    fs::write(&corpus_cache, corpus).unwrap();

    // the model is right more often for well-annotated terms
    let mut probe = String::new();
    for i in (0..n).filter(|i| !unprobed.contains(i)) {
        let p = 0.15 + 0.8 * (counts[i] as f64 / 6.0).min(1.0);
        let answer = if rng.random_bool(p) {
            term_id(i)
        } else {
            term_id((i + 1) % n)
        };
        let rec = json!({
            "term_id": term_id(i),
            "prompt": build_prompt(&label(i), "HP").unwrap(),
            "raw_response": format!("{answer}"),
            "model_name": MODEL,
            "timestamp": STAMP,
        });
        probe.push_str(&format!("{rec}\n"));
    }
    let probe_cache = dir.path().join("probe_cache.jsonl");
    fs::write(&probe_cache, probe).unwrap();

    Fixture {
        dir,
        ontology,
        annotations,
        corpus_cache,
        probe_cache,
    }
}

impl Fixture {
    /// Global flags for an offline run writing into `out`.
    pub fn args(&self, out: &Path) -> Vec<String> {
        vec![
            "--offline".into(),
            "--ontology".into(),
            self.ontology.display().to_string(),
            "--annotations".into(),
            self.annotations.display().to_string(),
            "--corpus-cache".into(),
            self.corpus_cache.display().to_string(),
            "--probe-cache".into(),
            self.probe_cache.display().to_string(),
            "--model".into(),
            MODEL.into(),
            "--output-dir".into(),
            out.display().to_string(),
        ]
    }
}

pub fn idlink(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idlink"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("run idlink")
}

pub const STAGES: [&str; 8] = [
    "profile",
    "fetch-corpus",
    "probe",
    "features",
    "analyze",
    "bins",
    "desert",
    "zipf",
];

/// Runs every stage in order, returning the first failing stage.
pub fn run_all(fx: &Fixture, out: &Path) -> Result<(), (String, Output)> {
    for stage in STAGES {
        let mut args = fx.args(out);
        args.push(stage.into());
        let o = idlink(&args);
        if !o.status.success() {
            return Err((stage.into(), o));
        }
    }
    Ok(())
}

/// Every file in `dir`, name and bytes, sorted by name.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}
