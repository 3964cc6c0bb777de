//! One function per subcommand. Each stage reads the artifacts of earlier
//! stages from the output directory and writes its own next to them.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Duration;

use flate2::read::GzDecoder;
use idlink_core::annotations::{parse_hpoa, parse_swissprot_go, AnnotationTable, GoAspect};
use idlink_core::config::{AnnotationFormat, RunConfig};
use idlink_core::corpus::{identifier_query, term_query, CorpusCache, PmcClient, PmcClientConfig};
use idlink_core::features::{build_dataset, build_feature_vector, Dataset, OntologyKind};
use idlink_core::http::UreqTransport;
use idlink_core::jsonl;
use idlink_core::ontology::{ontology_profile, parse_obo, OntologyGraph, TermRecord};
use idlink_core::probe::{run_probe, ChatClient, Completer, ProbeCache, ProbeOptions, ProbeResult};
use idlink_core::report::{accuracy_bins, accuracy_non_decreasing, bins_csv, desert_report};
use idlink_core::stats::{fit_logistic, metrics, univariate_report, usage_correlation_csv};
use idlink_core::zipf::{
    points_csv, rank_counts, render_svg, tail_dominance, zipf_points, ZipfOptions,
};

use crate::error::{CliError, CliResult};

const HTTP_TIMEOUT: Duration = Duration::from_secs(60);

const PROBE_RESULTS: &str = "probe_results.jsonl";
const FEATURES: &str = "features.csv";

/// Reads a text file, inflating it first when the name ends in `.gz`.
fn read_text(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut text = String::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_string(&mut text)
            .map_err(|e| CliError::io(path, e))?;
        Ok(text)
    } else {
        String::from_utf8(bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn write_output(cfg: &RunConfig, name: &str, contents: &str) -> CliResult<PathBuf> {
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    let path = cfg.output_dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

fn load_graph(cfg: &RunConfig) -> CliResult<OntologyGraph> {
    let text = read_text(cfg.ontology()?)?;
    let g = parse_obo(&text, cfg.root_override.clone())?;
    // an explicit root selects one branch, e.g. cellular component in GO
    Ok(if cfg.root_override.is_some() {
        g.restrict_to_root()
    } else {
        g
    })
}

fn load_annotations(cfg: &RunConfig, kind: Option<OntologyKind>) -> CliResult<AnnotationTable> {
    let text = read_text(cfg.annotations()?)?;
    let table = match cfg.annotation_format {
        AnnotationFormat::Hpoa => parse_hpoa(&text)?,
        AnnotationFormat::Swissprot => {
            let aspect = cfg
                .annotation_aspect
                .or((kind == Some(OntologyKind::GoCc)).then_some(GoAspect::Component));
            parse_swissprot_go(&text, aspect)
        }
    };
    if !table.skipped().is_empty() {
        log::warn!(
            "{} malformed annotation lines skipped",
            table.skipped().len()
        );
    }
    Ok(table)
}

fn kind_of(g: &OntologyGraph) -> Option<OntologyKind> {
    OntologyKind::from_prefix(g.root().prefix())
}

/// Live terms that reach the root, in identifier order.
fn pipeline_terms(g: &OntologyGraph) -> Vec<TermRecord> {
    g.terms()
        .filter(|t| g.depth(&t.id).is_ok())
        .cloned()
        .collect()
}

fn corpus_client(cfg: &RunConfig) -> CliResult<PmcClient> {
    let path = cfg.corpus_cache();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let cache = CorpusCache::open(&path).map_err(|e| CliError::io(&path, e))?;
    if cfg.offline {
        return Ok(PmcClient::offline(cache));
    }
    let config = PmcClientConfig {
        failure_log: Some(cfg.output_dir.join("corpus_failures.jsonl")),
        ..PmcClientConfig::default()
    };
    fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::io(&cfg.output_dir, e))?;
    PmcClient::new(
        cache,
        Some(Box::new(UreqTransport::new(HTTP_TIMEOUT))),
        config,
    )
    .map_err(|e| CliError::io(&cfg.output_dir, e))
}

fn read_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    let path = cfg.output_dir.join(FEATURES);
    if !path.is_file() {
        return Err(CliError::missing("features", &path));
    }
    let text = read_text(&path)?;
    let ds = Dataset::from_csv(&text, None, &cfg.provider.model)?;
    if ds.is_empty() {
        return Err(CliError::Input(format!("{} has no rows", path.display())));
    }
    Ok(ds)
}

pub fn profile(cfg: &RunConfig) -> CliResult<()> {
    let g = load_graph(cfg)?;
    let mut report = ontology_profile(&g);
    if cfg.annotation_path.is_some() {
        let table = load_annotations(cfg, kind_of(&g))?;
        report = report.with_annotations(&g, &table);
        write_output(cfg, "annotation_counts.csv", &table.to_csv())?;
        write_output(cfg, "annotation_skips.txt", &table.skip_report())?;
        let unknown = table.unknown_ids(&g);
        if !unknown.is_empty() {
            log::warn!("{} annotated identifiers are not live terms", unknown.len());
        }
    }
    let r = g.report();
    let mut parse_report = String::new();
    for id in &r.unreachable {
        parse_report.push_str(&format!("unreachable\t{id}\n"));
    }
    for (child, parent) in &r.dangling_edges {
        parse_report.push_str(&format!("dangling_edge\t{child}\t{parent}\n"));
    }
    write_output(cfg, "parse_report.txt", &parse_report)?;
    write_output(cfg, "profile.csv", &report.to_csv())?;
    let text = report.to_text();
    write_output(cfg, "profile.txt", &text)?;
    print!("{text}");
    Ok(())
}

pub fn fetch_corpus(cfg: &RunConfig) -> CliResult<()> {
    let g = load_graph(cfg)?;
    let mut client = corpus_client(cfg)?;
    let terms = pipeline_terms(&g);
    let mut failures = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        for q in [term_query(&t.name), identifier_query(&t.id)] {
            if let Err(e) = client.pmc_count(&q) {
                log::warn!("{e}");
                failures.push(CliError::from(e));
            }
        }
        if (i + 1) % 500 == 0 {
            log::info!("{} / {} terms", i + 1, terms.len());
        }
    }
    log::info!(
        "{} live requests, {} cached queries, {} failures",
        client.live_requests(),
        client.cache().len(),
        failures.len()
    );
    match failures.len() {
        0 => Ok(()),
        n => {
            let network = failures.iter().any(|e| matches!(e, CliError::Network(_)));
            let msg = format!("{n} corpus queries failed; rerun to resume from the cache");
            Err(if network {
                CliError::Network(msg)
            } else {
                CliError::Input(msg)
            })
        }
    }
}

pub fn probe(cfg: &RunConfig, partial: bool) -> CliResult<()> {
    let g = load_graph(cfg)?;
    let path = cfg.probe_cache();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut cache = ProbeCache::open(&path).map_err(|e| CliError::io(&path, e))?;
    let client = if cfg.offline {
        None
    } else {
        Some(ChatClient::from_env(
            cfg.provider.clone(),
            Box::new(UreqTransport::new(HTTP_TIMEOUT)),
        )?)
    };
    let options = ProbeOptions {
        concurrency: cfg.provider.concurrency,
        ..ProbeOptions::default()
    };
    let terms = pipeline_terms(&g);
    let run = run_probe(
        &terms,
        &cfg.provider.model,
        &mut cache,
        client.as_ref().map(|c| c as &dyn Completer),
        options,
    )?;

    let mut jsonl_out = String::new();
    for r in &run.results {
        jsonl_out.push_str(&jsonl::to_line(r).expect("probe results serialize"));
        jsonl_out.push('\n');
    }
    write_output(cfg, PROBE_RESULTS, &jsonl_out)?;
    let csv = run
        .results_csv()
        .map_err(|e| CliError::Input(e.to_string()))?;
    write_output(cfg, "probe_results.csv", &csv)?;
    write_output(cfg, "probe_unresolved.txt", &run.unresolved_report())?;

    let acc = run.accuracy(partial);
    println!(
        "{}: {} probed, {} unresolved, accuracy {}",
        cfg.provider.model,
        run.results.len(),
        run.unresolved.len(),
        acc.map_or("n/a".to_string(), |a| format!("{:.4}", a))
    );
    if !run.unresolved.is_empty() && !partial {
        let msg = format!(
            "{} terms unresolved; rerun to resume or pass --partial",
            run.unresolved.len()
        );
        return Err(if cfg.offline {
            CliError::Input(msg)
        } else {
            CliError::Network(msg)
        });
    }
    Ok(())
}

pub fn features(cfg: &RunConfig) -> CliResult<()> {
    let g = load_graph(cfg)?;
    let kind = kind_of(&g).ok_or_else(|| {
        CliError::Input(format!(
            "unsupported identifier prefix {}",
            g.root().prefix()
        ))
    })?;
    let table = load_annotations(cfg, Some(kind))?;
    let probes_path = cfg.output_dir.join(PROBE_RESULTS);
    if !probes_path.is_file() {
        return Err(CliError::missing("probe results", &probes_path));
    }
    let probes: Vec<ProbeResult> =
        jsonl::read_records(&probes_path).map_err(|e| CliError::io(&probes_path, e))?;
    let mut client = corpus_client(cfg)?;

    let terms = pipeline_terms(&g);
    let mut vectors = Vec::with_capacity(terms.len());
    for t in &terms {
        vectors.push(build_feature_vector(t, &g, &table, &mut client)?);
    }
    let (ds, recon) = build_dataset(vectors, &probes, kind, &cfg.provider.model, cfg.max_orphans)?;

    let mut recon_text = String::new();
    for id in &recon.vectors_without_probe {
        recon_text.push_str(&format!("no_probe\t{id}\n"));
    }
    for id in &recon.probes_without_vector {
        recon_text.push_str(&format!("no_features\t{id}\n"));
    }
    write_output(cfg, "reconciliation.txt", &recon_text)?;
    write_output(cfg, FEATURES, &ds.to_csv()?)?;
    println!("{} rows, {} unmatched terms", ds.len(), recon.mismatched());
    Ok(())
}

pub fn analyze(cfg: &RunConfig) -> CliResult<()> {
    let ds = read_dataset(cfg)?;
    let uni = univariate_report(&ds)?;
    let model = fit_logistic(&ds)?;
    if model.separation_warning || !model.converged {
        log::warn!(
            "logistic fit did not converge cleanly (separation: {}, iterations: {})",
            model.separation_warning,
            model.iterations
        );
    }
    let m = metrics(&model, &ds)?;
    if m.no_positive_predictions {
        log::warn!("no term crossed the 0.5 threshold; precision reported as 0");
    }
    write_output(cfg, "univariate.csv", &uni.to_csv())?;
    write_output(cfg, "coefficients.csv", &model.coefficients_csv())?;
    write_output(cfg, "metrics.csv", &m.to_csv())?;
    write_output(cfg, "model.json", &(model.to_json() + "\n"))?;
    write_output(cfg, "correlation.csv", &usage_correlation_csv(&ds))?;
    println!(
        "{} / {}: n={} accuracy={:.4} auc={:.4} mcfadden={:.4} tjur={:.4}",
        ds.ontology,
        ds.model_name,
        ds.len(),
        m.accuracy,
        m.auc,
        m.mcfadden_r2,
        m.tjur_r2
    );
    Ok(())
}

pub fn bins(cfg: &RunConfig) -> CliResult<()> {
    let ds = read_dataset(cfg)?;
    let rows = accuracy_bins(&ds, &cfg.bins);
    write_output(
        cfg,
        "bins.csv",
        &bins_csv(ds.ontology, &ds.model_name, &rows),
    )?;
    println!(
        "accuracy non-decreasing across bins: {}",
        accuracy_non_decreasing(&rows)
    );
    Ok(())
}

pub fn desert(cfg: &RunConfig) -> CliResult<()> {
    let ds = read_dataset(cfg)?;
    let d = desert_report(&ds);
    write_output(cfg, "desert.csv", &d.summary_csv())?;
    write_output(cfg, "unused_terms.txt", &d.unused_list())?;
    let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
    println!(
        "unused {} of {} ({:.2}%); correct among unused {}, among used {}",
        d.unused_count,
        d.total,
        100.0 * d.unused_fraction,
        pct(d.correct_among_unused),
        pct(d.correct_among_used)
    );
    Ok(())
}

pub fn zipf(cfg: &RunConfig) -> CliResult<()> {
    let ds = read_dataset(cfg)?;
    let ranked = rank_counts(
        ds.rows
            .iter()
            .map(|r| (r.features.term_id.clone(), r.features.annotation_count)),
    )?;
    let correct: HashMap<_, _> = ds
        .rows
        .iter()
        .map(|r| (r.features.term_id.clone(), r.label))
        .collect();
    let sample = zipf_points(
        &ranked,
        &correct,
        ZipfOptions {
            sample_n: cfg.zipf_sample,
            seed: cfg.seed,
            jitter: cfg.zipf_jitter,
        },
    )?;
    let title = format!("{} / {}", ds.ontology, ds.model_name);
    write_output(cfg, "zipf_points.csv", &points_csv(&sample.points))?;
    write_output(cfg, "zipf.svg", &render_svg(&sample.points, &title)?)?;
    if let Some(share) = tail_dominance(&sample.points) {
        println!("unannotated share of the tail: {:.1}%", 100.0 * share);
    }
    Ok(())
}
