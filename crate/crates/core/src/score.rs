use serde::{Deserialize, Serialize};

/// Where a score in a [`ScoreRecord`] came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Measured directly this generation.
    Evaluated,
    /// Copied from a taxon `distance` edges away in the phylogeny. A failed
    /// estimate carries `depth_limit + 1`.
    Estimated { distance: u32 },
    Unknown,
}

impl Provenance {
    pub fn is_known(self) -> bool {
        !matches!(self, Provenance::Unknown)
    }
}

/// Per-training-case scores of one individual.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    scores: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl ScoreRecord {
    /// A record with every position unknown.
    pub fn unknown(num_cases: usize) -> Self {
        ScoreRecord {
            scores: vec![0.0; num_cases],
            provenance: vec![Provenance::Unknown; num_cases],
        }
    }

    /// A record with every position evaluated.
    pub fn evaluated(scores: Vec<f64>) -> Self {
        let provenance = vec![Provenance::Evaluated; scores.len()];
        ScoreRecord { scores, provenance }
    }

    /// Panics if the two sequences differ in length.
    pub fn from_parts(scores: Vec<f64>, provenance: Vec<Provenance>) -> Self {
        assert_eq!(scores.len(), provenance.len(), "scores/provenance length mismatch");
        ScoreRecord { scores, provenance }
    }

    pub fn set(&mut self, case: usize, score: f64, provenance: Provenance) {
        self.scores[case] = score;
        self.provenance[case] = provenance;
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Score at `case`, or `None` when it is unknown.
    pub fn usable(&self, case: usize) -> Option<f64> {
        self.provenance[case].is_known().then(|| self.scores[case])
    }
}

/// Sum of all known scores; unknown positions count as zero.
pub fn aggregate_score(record: &ScoreRecord) -> f64 {
    record
        .scores
        .iter()
        .zip(&record.provenance)
        .filter(|(_, p)| p.is_known())
        .map(|(s, _)| s)
        .sum()
}
