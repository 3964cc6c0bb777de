use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use idlink_core::config::RunConfig;

mod commands;
mod error;

use error::CliResult;

/// Profile an ontology, probe a language model on its identifiers and
/// analyse which term properties predict linking failures.
#[derive(Debug, Parser)]
#[command(name = "idlink", version)]
struct Cli {
    /// Key-value configuration file; flags below override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override any configuration key. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// OBO file (optionally gzipped).
    #[arg(long, global = true, value_name = "PATH")]
    ontology: Option<String>,
    /// HPOA or Swiss-Prot annotation file (optionally gzipped).
    #[arg(long, global = true, value_name = "PATH")]
    annotations: Option<String>,
    /// `hpoa` or `swissprot`.
    #[arg(long, global = true, value_name = "FORMAT")]
    annotation_format: Option<String>,
    /// GO aspect filter for Swiss-Prot input: C, F or P.
    #[arg(long, global = true, value_name = "ASPECT")]
    aspect: Option<String>,
    /// Root term; the ontology is cut down to its descendants.
    #[arg(long, global = true, value_name = "CURIE")]
    root: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    corpus_cache: Option<String>,
    #[arg(long, global = true, value_name = "PATH")]
    probe_cache: Option<String>,
    #[arg(short, long, global = true, value_name = "DIR")]
    output_dir: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Never touch the network; cache misses become errors.
    #[arg(long, global = true)]
    offline: bool,
    /// Model name sent to the chat endpoint and recorded in outputs.
    #[arg(long, global = true)]
    model: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structural and usage summary of the ontology.
    Profile,
    /// Fill the PMC hit-count cache for every term label and identifier.
    FetchCorpus,
    /// Ask the model for each term's identifier and score the replies.
    Probe {
        /// Leave unresolved terms out of accuracy instead of failing.
        #[arg(long)]
        partial: bool,
    },
    /// Build the per-term feature table joined with probe outcomes.
    Features,
    /// Group contrasts, logistic regression and fit metrics.
    Analyze,
    /// Accuracy by annotation-count bin.
    Bins,
    /// Accuracy inside and outside the unannotated region.
    Desert,
    /// Rank-frequency plot data and SVG.
    Zipf,
}

impl Cli {
    fn config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.apply_overrides(self.overrides.iter().map(String::as_str))?;
        let flags = [
            ("ontology_path", &self.ontology),
            ("annotation_path", &self.annotations),
            ("annotation_format", &self.annotation_format),
            ("annotation_aspect", &self.aspect),
            ("root", &self.root),
            ("corpus_cache", &self.corpus_cache),
            ("probe_cache", &self.probe_cache),
            ("output_dir", &self.output_dir),
            ("model", &self.model),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.offline {
            cfg.offline = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = cli.config()?;
    match cli.command {
        Command::Profile => commands::profile(&cfg),
        Command::FetchCorpus => commands::fetch_corpus(&cfg),
        Command::Probe { partial } => commands::probe(&cfg, partial),
        Command::Features => commands::features(&cfg),
        Command::Analyze => commands::analyze(&cfg),
        Command::Bins => commands::bins(&cfg),
        Command::Desert => commands::desert(&cfg),
        Command::Zipf => commands::zipf(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
