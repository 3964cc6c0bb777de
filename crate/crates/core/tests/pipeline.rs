//! End-to-end runs through the library: live collection with scripted
//! services, then offline replay from the caches it wrote.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use idlink_core::corpus::{CorpusCache, PmcClient, PmcClientConfig};
use idlink_core::features::{build_dataset, build_feature_vector};
use idlink_core::http::{HttpTransport, RetryPolicy, TransportError};
use idlink_core::ontology::{ontology_profile, write_normalized_obo};
use idlink_core::probe::{run_probe, Completer, ProbeCache, ProbeError, ProbeOptions};
use idlink_core::report::{accuracy_bins, bins_csv, desert_report, BinSpec};
use idlink_core::stats::{fit_logistic, metrics, univariate_report};
use idlink_core::synthetic::{feature_dataset, LabelModel};
use idlink_core::zipf::{points_csv, rank_terms, render_svg, zipf_points, Category, ZipfOptions};
use idlink_core::{parse_hpoa, parse_obo, Curie, OntologyKind, TermRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hash(s: &str) -> u64 {
    // FNV-1a, stable across runs and platforms
    s.bytes().fold(0xcbf29ce484222325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100000001b3)
    })
}

/// ESearch stand-in whose count is a pure function of the URL.
struct FakeEsearch(AtomicUsize);

impl HttpTransport for FakeEsearch {
    fn get(&self, url: &str) -> Result<String, TransportError> {
        self.0.fetch_add(1, Ordering::SeqCst);
        Ok(format!(
            r#"{{"esearchresult":{{"count":"{}"}}}}"#,
            hash(url) % 5000
        ))
    }

    fn post_json(
        &self,
        _: &str,
        _: Option<&str>,
        _: &serde_json::Value,
    ) -> Result<String, TransportError> {
        Err(TransportError::Status(405))
    }
}

/// Answers correctly for two thirds of the labels and with the next term's id
/// for the rest.
struct FakeModel {
    calls: AtomicUsize,
}

impl Completer for FakeModel {
    fn complete(&self, prompt: &str) -> Result<String, ProbeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let label = prompt.split('\'').nth(1).unwrap();
        let n: usize = label.trim_start_matches("term ").parse().unwrap();
        let id = fixture_id(if !hash(label).is_multiple_of(3) {
            n
        } else {
            n + 1
        });
        Ok(format!("The answer is {id}."))
    }
}

/// Term `i` of the fixture ontology; a third of the ids start with 000.
fn fixture_id(i: usize) -> Curie {
    let digits = if i.is_multiple_of(3) {
        i
    } else {
        1_000_000 * (i % 9 + 1) + i
    };
    format!("HP:{digits:07}").parse().unwrap()
}

fn fixture_obo(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = vec![TermRecord::new(fixture_id(0), "term 0")];
    for i in 1..n {
        let p = rng.random_range(0..i);
        terms.push(
            TermRecord::new(fixture_id(i), format!("term {i}")).with_parents([fixture_id(p)]),
        );
    }
    let g = idlink_core::OntologyGraph::from_terms(terms, None).unwrap();
    write_normalized_obo(&g)
}

fn fixture_hpoa(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("#generated\ndatabase_id\thpo_id\n");
    for _ in 0..4 * n {
        // heavy-tailed: low ids get most annotations, many get none
        let t = (rng.random::<f64>().powi(3) * n as f64 * 1.6) as usize;
        if t < n {
            s.push_str(&format!("OMIM:1\t{}\n", fixture_id(t)));
        }
    }
    s
}

/// Every output the pipeline writes, in a fixed order.
fn run(dir: &Path, live: bool) -> (Vec<String>, usize) {
    let g = parse_obo(&fixture_obo(120, 5), None).unwrap();
    let table = parse_hpoa(&fixture_hpoa(120, 6)).unwrap();
    let terms: Vec<TermRecord> = g.terms().cloned().collect();

    let transport = FakeEsearch(AtomicUsize::new(0));
    let cache = CorpusCache::open(&dir.join("corpus.jsonl")).unwrap();
    let config = PmcClientConfig {
        min_interval: Duration::ZERO,
        retry: RetryPolicy::no_delay(1),
        api_key: None,
        ..PmcClientConfig::default()
    };
    let boxed: Option<Box<dyn HttpTransport>> = live.then(|| Box::new(transport) as _);
    let mut pmc = PmcClient::new(cache, boxed, config).unwrap();

    let model = FakeModel {
        calls: AtomicUsize::new(0),
    };
    let mut probe_cache = ProbeCache::open(&dir.join("probe.jsonl")).unwrap();
    let options = ProbeOptions {
        retry: RetryPolicy::no_delay(1),
        concurrency: 4,
    };
    let completer: Option<&dyn Completer> = if live { Some(&model) } else { None };
    let probe = run_probe(&terms, "fake-model", &mut probe_cache, completer, options).unwrap();
    assert!(probe.unresolved.is_empty());

    let vectors: Vec<_> = terms
        .iter()
        .map(|t| build_feature_vector(t, &g, &table, &mut pmc).unwrap())
        .collect();
    let (ds, recon) =
        build_dataset(vectors, &probe.results, OntologyKind::Hpo, "fake-model", 0).unwrap();
    assert_eq!(recon.mismatched(), 0);

    let fit = fit_logistic(&ds).unwrap();
    let ranked = rank_terms(
        &table,
        &terms.iter().map(|t| t.id.clone()).collect::<Vec<_>>(),
    )
    .unwrap();
    let correct: HashMap<Curie, bool> = probe
        .results
        .iter()
        .map(|r| (r.term_id.clone(), r.correct))
        .collect();
    let sample = zipf_points(
        &ranked,
        &correct,
        ZipfOptions {
            sample_n: 80,
            seed: 3,
            jitter: 0.05,
        },
    )
    .unwrap();
    let bins = accuracy_bins(&ds, &BinSpec::default());

    let outputs = vec![
        ontology_profile(&g).with_annotations(&g, &table).to_csv(),
        probe.results_csv().unwrap(),
        ds.to_csv().unwrap(),
        univariate_report(&ds).unwrap().to_csv(),
        fit.coefficients_csv(),
        fit.to_json(),
        metrics(&fit, &ds).unwrap().to_csv(),
        bins_csv(ds.ontology, &ds.model_name, &bins),
        desert_report(&ds).summary_csv(),
        points_csv(&sample.points),
        render_svg(&sample.points, "fixture").unwrap(),
    ];
    let calls = model.calls.load(Ordering::SeqCst) + pmc.live_requests();
    (outputs, calls)
}

#[test]
fn offline_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (first, live_calls) = run(dir.path(), true);
    assert!(live_calls > 0);
    let (second, replay_calls) = run(dir.path(), false);
    assert_eq!(replay_calls, 0);
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a, b);
    }
    // a second live run is served from cache as well
    let (third, calls) = run(dir.path(), true);
    assert_eq!(calls, 0);
    assert_eq!(first, third);
}

#[test]
fn label_equal_to_a_feature_tops_both_rankings() {
    let ds = feature_dataset(600, LabelModel::EqualsLeaf, 21);
    let uni = univariate_report(&ds).unwrap();
    assert_eq!(uni.features[0].feature, "leaf");
    assert!(uni.features[0].cohens_d.is_infinite());

    let fit = fit_logistic(&ds).unwrap();
    assert!(fit.separation_warning);
    assert_eq!(fit.ranked_coefficients()[0].0, "leaf");
}

#[test]
fn random_labels_give_chance_discrimination() {
    let ds = feature_dataset(2000, LabelModel::Random, 22);
    let fit = fit_logistic(&ds).unwrap();
    let m = metrics(&fit, &ds).unwrap();
    assert!((m.auc - 0.5).abs() <= 0.05, "auc {}", m.auc);
    assert!(m.mcfadden_r2 < 0.02);
}

fn zipf_fixture(seed: u64) -> (Vec<idlink_core::zipf::RankedTerm>, HashMap<Curie, bool>) {
    let table = parse_hpoa(&fixture_hpoa(500, seed)).unwrap();
    let ids: Vec<Curie> = (0..500).map(fixture_id).collect();
    let ranked = rank_terms(&table, &ids).unwrap();
    let correct = ids
        .iter()
        .map(|id| (id.clone(), hash(id.as_str()).is_multiple_of(2)))
        .collect();
    (ranked, correct)
}

#[test]
fn zipf_points_are_exact_and_bounded() {
    let (ranked, correct) = zipf_fixture(9);
    for w in ranked.windows(2) {
        assert!(w[0].count >= w[1].count);
        assert_eq!(w[1].rank, w[0].rank + 1);
    }
    let opts = ZipfOptions {
        sample_n: 200,
        seed: 4,
        jitter: 0.05,
    };
    let sample = zipf_points(&ranked, &correct, opts).unwrap();
    assert_eq!(sample.points.len(), 200);
    for p in &sample.points {
        assert_eq!(p.x, (p.rank as f64).log10());
        assert_eq!(p.y, (p.count as f64 + 0.1).log10());
        assert_eq!(p.y == -1.0, p.count == 0);
        assert!((p.x_jittered - p.x).abs() <= 0.05);
        assert!((p.y_jittered - p.y).abs() <= 0.05);
        let want = match (p.count, correct[&p.term_id]) {
            (0, _) => Category::NoAnnotation,
            (_, true) => Category::Correct,
            (_, false) => Category::Incorrect,
        };
        assert_eq!(p.category, want);
    }
}

#[test]
fn zipf_output_is_seeded() {
    let (ranked, correct) = zipf_fixture(10);
    let draw = |seed| {
        let s = zipf_points(
            &ranked,
            &correct,
            ZipfOptions {
                sample_n: 150,
                seed,
                jitter: 0.05,
            },
        )
        .unwrap();
        (points_csv(&s.points), render_svg(&s.points, "t").unwrap())
    };
    assert_eq!(draw(1), draw(1));
    assert_ne!(draw(1).0, draw(2).0);
}
