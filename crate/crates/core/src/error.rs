use thiserror::Error;

use crate::phylogeny::TaxonId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown taxon {0}")]
    UnknownTaxon(TaxonId),

    #[error("taxon {0} has no extant members")]
    NotExtant(TaxonId),

    #[error("training case {index} out of range (num_cases = {num_cases})")]
    CaseOutOfRange { index: usize, num_cases: usize },

    #[error("estimation requested with estimator mode `none`")]
    EstimationDisabled,

    #[error("population is empty")]
    EmptyPopulation,

    #[error("unsupported problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by the experiment description rather than the
    /// environment.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownProblem(_))
    }
}
