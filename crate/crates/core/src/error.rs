use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::features::FeaturesError;
use crate::ingest::IngestError;
use crate::model::ModelError;
use crate::practices::PracticesError;
use crate::stats::StatsError;

/// Any error the library can raise, with the stable code of its source.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeaturesError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Practices(#[from] PracticesError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Ingest(e) => e.code(),
            Error::Corpus(e) => e.code(),
            Error::Features(e) => e.code(),
            Error::Model(e) => e.code(),
            Error::Eval(e) => e.code(),
            Error::Practices(e) => e.code(),
            Error::Stats(e) => e.code(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_pass_through() {
        let e: Error = StatsError::EmptySample.into();
        assert_eq!(e.code(), "E-STATS-EMPTY-SAMPLE");
        let e: Error = CorpusError::EmptyDataset.into();
        assert_eq!(e.code(), "E-CORPUS-EMPTY");
    }
}
