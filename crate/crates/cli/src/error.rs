use thiserror::Error;

/// Failures surfaced by the command line, each mapped to an exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] repodomain_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "E-CLI-USAGE",
            CliError::Input(_) => "E-CLI-INPUT",
            CliError::Io { .. } => "E-CLI-IO",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

macro_rules! via_core {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        })*
    };
}

via_core!(
    repodomain_core::ingest::IngestError,
    repodomain_core::corpus::CorpusError,
    repodomain_core::features::FeaturesError,
    repodomain_core::model::ModelError,
    repodomain_core::eval::EvalError,
    repodomain_core::practices::PracticesError,
    repodomain_core::stats::StatsError
);
