//! Phylogeny-informed fitness estimation.
//!
//! An individual that was not evaluated on a training case borrows the score
//! of the closest taxon in the phylogeny that was. Ancestor mode only looks up
//! the line of descent; relative mode runs a breadth-first search over the
//! whole (pruned) tree. Misses get the configured failure score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phylogeny::{Phylogeny, TaxonId};
use crate::score::{Provenance, ScoreRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    None,
    Ancestor,
    Relative,
}

impl EstimatorMode {
    pub fn is_active(self) -> bool {
        self != EstimatorMode::None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    pub depth_limit: u32,
    /// Score assigned when no source is found; the worst attainable score.
    pub fail_score: f64,
}

impl EstimatorConfig {
    pub fn new(mode: EstimatorMode, depth_limit: u32, fail_score: f64) -> Self {
        EstimatorConfig { mode, depth_limit, fail_score }
    }

    pub fn miss(&self) -> (f64, Provenance) {
        (self.fail_score, Provenance::Estimated { distance: self.depth_limit + 1 })
    }
}

/// Estimates the score of `taxon` on one case.
pub fn estimate_case(
    phylo: &Phylogeny,
    taxon: TaxonId,
    case: usize,
    cfg: &EstimatorConfig,
) -> Result<(f64, Provenance)> {
    if !phylo.contains(taxon) {
        return Err(Error::UnknownTaxon(taxon));
    }
    let hit = match cfg.mode {
        EstimatorMode::None => return Err(Error::EstimationDisabled),
        EstimatorMode::Ancestor => phylo.nearest_evaluated_ancestor(taxon, case, cfg.depth_limit),
        EstimatorMode::Relative => phylo.nearest_evaluated_relative(taxon, case, cfg.depth_limit),
    };
    Ok(match hit {
        Some((score, distance)) => (score, Provenance::Estimated { distance }),
        None => cfg.miss(),
    })
}

/// Estimates for every case at once. Equivalent to calling [`estimate_case`]
/// for each case, but the tree is searched only once per taxon.
pub fn taxon_estimates(
    phylo: &Phylogeny,
    taxon: TaxonId,
    num_cases: usize,
    cfg: &EstimatorConfig,
) -> Result<Vec<(f64, Provenance)>> {
    let sources: Vec<(TaxonId, u32)> = match cfg.mode {
        EstimatorMode::None => return Err(Error::EstimationDisabled),
        EstimatorMode::Ancestor => phylo
            .lineage(taxon, cfg.depth_limit)?
            .into_iter()
            .zip(0..)
            .collect(),
        EstimatorMode::Relative => {
            if !phylo.contains(taxon) {
                return Err(Error::UnknownTaxon(taxon));
            }
            phylo.relatives_within(taxon, cfg.depth_limit)
        }
    };
    let sources: Vec<_> = sources
        .into_iter()
        .filter_map(|(id, d)| phylo.get(id).filter(|t| t.num_evaluated() > 0).map(|t| (t, d)))
        .collect();
    Ok((0..num_cases)
        .map(|case| {
            sources
                .iter()
                .find_map(|(t, d)| t.evaluation(case).map(|s| (s, Provenance::Estimated { distance: *d })))
                .unwrap_or_else(|| cfg.miss())
        })
        .collect())
}

/// Builds the full score record for one individual: its direct evaluations
/// verbatim, everything else estimated (or unknown when estimation is off).
pub fn complete_scores(
    phylo: &Phylogeny,
    taxon: TaxonId,
    evaluated: &[(usize, f64)],
    num_cases: usize,
    cfg: &EstimatorConfig,
) -> Result<ScoreRecord> {
    let estimates = if cfg.mode.is_active() {
        Some(taxon_estimates(phylo, taxon, num_cases, cfg)?)
    } else {
        None
    };
    complete_from_estimates(estimates.as_deref(), evaluated, num_cases)
}

/// Overlays direct evaluations on precomputed estimates (`None` means no
/// estimation: unevaluated cases stay unknown).
pub fn complete_from_estimates(
    estimates: Option<&[(f64, Provenance)]>,
    evaluated: &[(usize, f64)],
    num_cases: usize,
) -> Result<ScoreRecord> {
    let mut record = match estimates {
        Some(est) => {
            let (s, p) = est.iter().copied().unzip();
            ScoreRecord::from_parts(s, p)
        }
        None => ScoreRecord::unknown(num_cases),
    };
    for &(case, score) in evaluated {
        if case >= num_cases {
            return Err(Error::CaseOutOfRange { index: case, num_cases });
        }
        record.set(case, score, Provenance::Evaluated);
    }
    Ok(record)
}
