//! Phylogeny-informed fitness estimation for subsampled lexicase selection.
//!
//! Individuals are evaluated on a random subset of training cases each
//! generation; the runtime phylogeny fills in the remaining scores from the
//! nearest evaluated ancestor or relative so that parent selection can use
//! the full training set.

pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod genome;
pub mod gp;
pub mod phylogeny;
pub mod rng;
pub mod score;
pub mod selection;

pub use error::{Error, Result};
pub use estimation::{EstimatorConfig, EstimatorMode};
pub use genome::NumericGenome;
pub use phylogeny::{GenotypeKey, Phylogeny, Taxon, TaxonId};
pub use rng::RngStream;
pub use score::{aggregate_score, Provenance, ScoreRecord};
pub use selection::{SelectionPlan, SubsamplingKind};
