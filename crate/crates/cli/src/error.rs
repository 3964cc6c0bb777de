use std::path::Path;
use std::process::ExitCode;

use idlink_core::annotations::AnnotationError;
use idlink_core::config::ConfigError;
use idlink_core::corpus::CorpusError;
use idlink_core::features::FeatureError;
use idlink_core::ontology::OntologyError;
use idlink_core::probe::ProbeError;
use idlink_core::report::BinError;
use idlink_core::stats::StatsError;
use idlink_core::zipf::ZipfError;

/// Failure classes, each with its own process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Network(String),
    #[error("statistical degeneracy: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Input(_) => 1,
            CliError::Network(_) => 2,
            CliError::Degenerate(_) => 3,
        })
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn missing(name: &str, path: &Path) -> Self {
        CliError::Input(format!(
            "missing input `{name}` ({}); run the earlier pipeline stage first",
            path.display()
        ))
    }
}

pub type CliResult<T> = Result<T, CliError>;

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_error!(
    ConfigError,
    OntologyError,
    AnnotationError,
    BinError,
    ZipfError
);

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Degenerate(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Http { .. } | CorpusError::Protocol { .. } => {
                CliError::Network(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Transport(_) | ProbeError::Protocol(_) => CliError::Network(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::MissingCorpusCount { source, query } => match CliError::from(source) {
                CliError::Network(m) => CliError::Network(m),
                other => CliError::Input(format!("no corpus count for {query}: {other}")),
            },
            other => CliError::Input(other.to_string()),
        }
    }
}
