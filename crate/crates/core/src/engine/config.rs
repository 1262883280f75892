use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostic, SATISFACTION_THRESHOLD};
use crate::error::{Error, Result};
use crate::estimation::{EstimatorConfig, EstimatorMode};
use crate::gp::{MutationRates, ProblemName};
use crate::selection::{cohort_count, downsample_size, SubsamplingKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Contradictory,
    Multipath,
    Median,
    Grade,
}

impl ProblemKind {
    pub fn is_diagnostic(self) -> bool {
        matches!(self, ProblemKind::Contradictory | ProblemKind::Multipath)
    }

    pub fn diagnostic(self) -> Option<Diagnostic> {
        match self {
            ProblemKind::Contradictory => Some(Diagnostic::Contradictory),
            ProblemKind::Multipath => Some(Diagnostic::Multipath),
            _ => None,
        }
    }

    pub fn gp_problem(self) -> Option<ProblemName> {
        match self {
            ProblemKind::Median => Some(ProblemName::Median),
            ProblemKind::Grade => Some(ProblemName::Grade),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Contradictory => "contradictory",
            ProblemKind::Multipath => "multipath",
            ProblemKind::Median => "median",
            ProblemKind::Grade => "grade",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "contradictory" | "contradictory-objectives" => Ok(ProblemKind::Contradictory),
            "multipath" | "multi-path" | "multipath-exploration" => Ok(ProblemKind::Multipath),
            "median" => Ok(ProblemKind::Median),
            "grade" => Ok(ProblemKind::Grade),
            _ => Err(Error::UnknownProblem(s.to_string())),
        }
    }
}

/// How much of the phylogeny is kept between generations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Retention {
    /// Remove extinct branches only.
    Pruned,
    /// Also drop extinct taxa beyond the search depth of every extant taxon.
    Depth,
}

impl FromStr for Retention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pruned" => Ok(Retention::Pruned),
            "depth" => Ok(Retention::Depth),
            _ => Err(Error::config(format!("phylo_retention must be `pruned` or `depth`, got `{s}`"))),
        }
    }
}

pub fn parse_subsampling(s: &str) -> Result<SubsamplingKind> {
    match s.to_ascii_lowercase().as_str() {
        "full" | "standard" => Ok(SubsamplingKind::Full),
        "downsample" | "down-sample" | "down_sample" | "downsampled" => Ok(SubsamplingKind::DownSample),
        "cohort" | "cohorts" => Ok(SubsamplingKind::Cohort),
        _ => Err(Error::config(format!("unknown subsampling `{s}` (full, downsample, cohort)"))),
    }
}

pub fn subsampling_str(kind: SubsamplingKind) -> &'static str {
    match kind {
        SubsamplingKind::Full => "full",
        SubsamplingKind::DownSample => "downsample",
        SubsamplingKind::Cohort => "cohort",
    }
}

pub fn parse_estimator(s: &str) -> Result<EstimatorMode> {
    match s.to_ascii_lowercase().as_str() {
        "none" | "off" => Ok(EstimatorMode::None),
        "ancestor" => Ok(EstimatorMode::Ancestor),
        "relative" => Ok(EstimatorMode::Relative),
        _ => Err(Error::config(format!("unknown estimator `{s}` (none, ancestor, relative)"))),
    }
}

pub fn estimator_str(mode: EstimatorMode) -> &'static str {
    match mode {
        EstimatorMode::None => "none",
        EstimatorMode::Ancestor => "ancestor",
        EstimatorMode::Relative => "relative",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub subsampling: SubsamplingKind,
    pub level: f64,
    pub estimator: EstimatorMode,
    pub depth_limit: u32,
    pub pop_size: usize,
    pub max_generations: Option<u64>,
    pub max_evaluations: Option<u64>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Phylogeny snapshot cadence in generations; 0 writes only the final one.
    pub snapshot_interval: u64,
    pub phylo_retention: Retention,

    // diagnostics
    pub genome_length: usize,
    pub per_gene_rate: f64,
    pub sigma: f64,
    /// Initial genes are uniform in `[0, init_gene_max]`.
    pub init_gene_max: f64,
    pub satisfaction_threshold: f64,

    // GP
    pub problem_seed: u64,
    pub mutation: MutationRates,
}

impl ExperimentConfig {
    /// Defaults for `problem`: 500 individuals for 50,000 generations with
    /// search depth 10 on the diagnostics, 1,000 programs with a 30,000,000
    /// evaluation budget and search depth 5 for GP.
    pub fn new(problem: ProblemKind) -> Self {
        let diag = problem.is_diagnostic();
        ExperimentConfig {
            problem,
            subsampling: SubsamplingKind::Full,
            level: 1.0,
            estimator: EstimatorMode::None,
            depth_limit: if diag { 10 } else { 5 },
            pop_size: if diag { 500 } else { 1000 },
            max_generations: diag.then_some(50_000),
            max_evaluations: (!diag).then_some(30_000_000),
            seed: 0,
            output_dir: None,
            snapshot_interval: 1000,
            phylo_retention: Retention::Depth,
            genome_length: 100,
            per_gene_rate: 0.007,
            sigma: 1.0,
            init_gene_max: 100.0,
            satisfaction_threshold: SATISFACTION_THRESHOLD,
            problem_seed: 0,
            mutation: MutationRates::default(),
        }
    }

    pub fn num_cases(&self) -> usize {
        if self.problem.is_diagnostic() {
            self.genome_length
        } else {
            crate::gp::problems::TRAINING_SET_SIZE
        }
    }

    /// Worst attainable per-case score: a zero trait or a failed test.
    pub fn fail_score(&self) -> f64 {
        0.0
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig::new(self.estimator, self.depth_limit, self.fail_score())
    }

    /// Direct evaluations spent per generation under this configuration.
    pub fn evaluations_per_generation(&self) -> u64 {
        let (pop, t) = (self.pop_size as u64, self.num_cases() as u64);
        match self.subsampling {
            SubsamplingKind::Full => pop * t,
            SubsamplingKind::DownSample => pop * downsample_size(self.level, t as usize) as u64,
            SubsamplingKind::Cohort => {
                // cohort i gets the i-th largest share of both individuals and cases
                let k = cohort_count(self.level) as u64;
                (0..k)
                    .map(|i| (pop / k + u64::from(i < pop % k)) * (t / k + u64::from(i < t % k)))
                    .sum()
            }
        }
    }

    /// Short label identifying the experimental condition.
    pub fn condition_label(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.problem,
            subsampling_str(self.subsampling),
            self.level,
            estimator_str(self.estimator)
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level <= 1.0) {
            return Err(Error::config(format!("level must be in (0, 1], got {}", self.level)));
        }
        if self.pop_size == 0 {
            return Err(Error::config("pop_size must be at least 1"));
        }
        if self.problem.is_diagnostic() {
            if self.max_generations.is_none() || self.max_evaluations.is_some() {
                return Err(Error::config(
                    "diagnostic runs are bounded by max_generations (and not max_evaluations)",
                ));
            }
            if self.genome_length == 0 {
                return Err(Error::config("genome_length must be at least 1"));
            }
            if !(0.0..=1.0).contains(&self.per_gene_rate) {
                return Err(Error::config("per_gene_rate must be in [0, 1]"));
            }
            if !(self.sigma > 0.0 && self.sigma.is_finite()) {
                return Err(Error::config("sigma must be positive"));
            }
            if !(self.init_gene_max >= 0.0 && self.init_gene_max <= 100.0) {
                return Err(Error::config("init_gene_max must be in [0, 100]"));
            }
            if !(self.satisfaction_threshold > 0.0 && self.satisfaction_threshold < 100.0) {
                return Err(Error::config("satisfaction_threshold must be in (0, 100)"));
            }
        } else {
            if self.max_evaluations.is_none() || self.max_generations.is_some() {
                return Err(Error::config(
                    "GP runs are bounded by max_evaluations (and not max_generations)",
                ));
            }
            let m = &self.mutation;
            for (name, p) in [
                ("insertion_rate", m.insertion),
                ("deletion_rate", m.deletion),
                ("substitution_rate", m.substitution),
                ("slip_rate", m.slip),
            ] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::config(format!("{name} must be in [0, 1]")));
                }
            }
        }
        if self.subsampling == SubsamplingKind::Cohort {
            let k = cohort_count(self.level);
            if k > self.pop_size || k > self.num_cases() {
                return Err(Error::config(format!(
                    "{k} cohorts exceed the population ({}) or the training set ({})",
                    self.pop_size,
                    self.num_cases()
                )));
            }
        }
        Ok(())
    }
}
