//! The generational loop.
//!
//! Each generation: build a subsampling plan, evaluate every individual on its
//! assigned cases (recording the results on its taxon), complete the score
//! records by estimation, select parents, reproduce with mutation, and update
//! the phylogeny. [`Experiment`] exposes the two halves of a generation so
//! tests can inspect every step; [`run_experiment`] drives a whole run and
//! writes its output files.

mod config;
mod output;

use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    estimator_str, parse_estimator, parse_subsampling, subsampling_str, ExperimentConfig, ProblemKind,
    Retention,
};
pub use output::{MetricsRow, METRICS_HEADER};

use crate::diagnostics::{self, Diagnostic, DiagnosticPhenotype};
use crate::error::Result;
use crate::estimation::{complete_from_estimates, taxon_estimates};
use crate::genome::{mutate_gaussian, NumericGenome};
use crate::gp::{self, build_problem, check_solution, evaluate_case, LinearProgram, ProblemSpec};
use crate::phylogeny::{GenotypeKey, Phylogeny, TaxonId};
use crate::rng::RngStream;
use crate::score::{aggregate_score, Provenance, ScoreRecord};
use crate::selection::{
    make_cohort_plan, make_downsample_plan, make_full_plan, select_parents, SelectionPlan, SubsamplingKind,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLedger {
    /// Direct (individual, training case) evaluations so far.
    pub evaluations_used: u64,
    pub generations_completed: u64,
}

#[derive(Clone, Debug)]
enum Population {
    Diagnostic { diagnostic: Diagnostic, genomes: Vec<NumericGenome> },
    Gp { spec: Arc<ProblemSpec>, programs: Vec<LinearProgram> },
}

fn genome_key(genome: &NumericGenome) -> GenotypeKey {
    let mut h = DefaultHasher::new();
    for bits in genome.key_bits() {
        bits.hash(&mut h);
    }
    GenotypeKey(h.finish())
}

/// Everything produced by the evaluation half of a generation.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub generation: u64,
    pub plan: SelectionPlan,
    /// Direct `(case, score)` evaluations per individual.
    pub evaluated: Vec<Vec<(usize, f64)>>,
    pub records: Vec<ScoreRecord>,
    pub metrics: MetricsRow,
    /// Population index of a program that solved the problem, if any.
    pub solution: Option<usize>,
}

#[derive(Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    rng: RngStream,
    phylo: Phylogeny,
    population: Population,
    taxa: Vec<TaxonId>,
    ledger: BudgetLedger,
    generation: u64,
    // taxa already full-tested without success
    failed_candidates: HashSet<TaxonId>,
}

impl Experiment {
    /// Validates `config` and creates the random initial population.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = RngStream::new(config.seed);
        let mut phylo = Phylogeny::new(config.num_cases());
        let pop = config.pop_size;
        let (population, keys): (Population, Vec<GenotypeKey>) = if let Some(diagnostic) = config.problem.diagnostic() {
            let genomes: Vec<NumericGenome> = (0..pop)
                .map(|_| NumericGenome::random(config.genome_length, config.init_gene_max, rng.init()))
                .collect();
            let keys = genomes.iter().map(genome_key).collect();
            (Population::Diagnostic { diagnostic, genomes }, keys)
        } else {
            let name = config.problem.gp_problem().expect("GP problem");
            let mut problem_rng = RngStream::new(config.problem_seed);
            let spec = Arc::new(build_problem(name, problem_rng.init()));
            let programs: Vec<LinearProgram> = (0..pop)
                .map(|_| {
                    let len = rng.init().random_range(1..=spec.max_len);
                    LinearProgram::random(len, rng.init())
                })
                .collect();
            let keys = programs.iter().map(|p| GenotypeKey(p.genotype_hash())).collect();
            (Population::Gp { spec, programs }, keys)
        };
        let taxa = keys
            .into_iter()
            .map(|k| phylo.register_birth(k, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(Experiment {
            config,
            rng,
            phylo,
            population,
            taxa,
            ledger: BudgetLedger::default(),
            generation: 0,
            failed_candidates: HashSet::new(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn phylogeny(&self) -> &Phylogeny {
        &self.phylo
    }

    pub fn ledger(&self) -> BudgetLedger {
        self.ledger
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn taxa(&self) -> &[TaxonId] {
        &self.taxa
    }

    pub fn pop_size(&self) -> usize {
        self.taxa.len()
    }

    pub fn genomes(&self) -> Option<&[NumericGenome]> {
        match &self.population {
            Population::Diagnostic { genomes, .. } => Some(genomes),
            Population::Gp { .. } => None,
        }
    }

    pub fn programs(&self) -> Option<&[LinearProgram]> {
        match &self.population {
            Population::Gp { programs, .. } => Some(programs),
            Population::Diagnostic { .. } => None,
        }
    }

    pub fn problem_spec(&self) -> Option<&ProblemSpec> {
        match &self.population {
            Population::Gp { spec, .. } => Some(spec),
            Population::Diagnostic { .. } => None,
        }
    }

    /// Whether the evaluation budget covers one more generation.
    pub fn can_afford_generation(&self) -> bool {
        match self.config.max_evaluations {
            Some(max) => self.ledger.evaluations_used + self.config.evaluations_per_generation() <= max,
            None => true,
        }
    }

    fn make_plan(&mut self) -> Result<SelectionPlan> {
        let t = self.config.num_cases();
        match self.config.subsampling {
            SubsamplingKind::Full => Ok(make_full_plan(t)),
            SubsamplingKind::DownSample => make_downsample_plan(t, self.config.level, &mut self.rng),
            SubsamplingKind::Cohort => make_cohort_plan(self.pop_size(), t, self.config.level, &mut self.rng),
        }
    }

    /// Current diagnostic phenotypes (empty for GP).
    pub fn phenotypes(&self) -> Vec<DiagnosticPhenotype> {
        match &self.population {
            Population::Diagnostic { diagnostic, genomes } => {
                genomes.par_iter().map(|g| diagnostic.translate(g)).collect()
            }
            Population::Gp { .. } => Vec::new(),
        }
    }

    /// Evaluation half of a generation: plan, direct evaluation, phylogeny
    /// annotation, estimation, metrics, and (GP) solution screening.
    pub fn evaluate(&mut self) -> Result<Evaluation> {
        let plan = self.make_plan()?;
        let pop = self.pop_size();
        let num_cases = self.config.num_cases();
        let phenotypes = self.phenotypes();

        let evaluated: Vec<Vec<(usize, f64)>> = match &self.population {
            Population::Diagnostic { .. } => (0..pop)
                .into_par_iter()
                .map(|i| {
                    let traits = phenotypes[i].traits();
                    plan.cases_for(i).to_vec().into_iter().map(|c| (c, traits[c])).collect()
                })
                .collect(),
            Population::Gp { spec, programs } => (0..pop)
                .into_par_iter()
                .map(|i| {
                    plan.cases_for(i)
                        .to_vec()
                        .into_iter()
                        .map(|c| (c, evaluate_case(&programs[i], &spec.training[c], spec.max_steps)))
                        .collect()
                })
                .collect(),
        };
        for (i, evals) in evaluated.iter().enumerate() {
            for &(c, s) in evals {
                self.phylo.record_evaluation(self.taxa[i], c, s)?;
            }
        }
        self.ledger.evaluations_used += plan.evaluation_count(pop);

        let est_cfg = self.config.estimator_config();
        let records: Vec<ScoreRecord> = if est_cfg.mode.is_active() {
            let mut distinct = self.taxa.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let phylo = &self.phylo;
            let estimates: HashMap<TaxonId, Vec<(f64, Provenance)>> = distinct
                .par_iter()
                .map(|&t| taxon_estimates(phylo, t, num_cases, &est_cfg).map(|e| (t, e)))
                .collect::<Result<_>>()?;
            evaluated
                .par_iter()
                .zip(&self.taxa)
                .map(|(ev, t)| complete_from_estimates(Some(&estimates[t]), ev, num_cases))
                .collect::<Result<_>>()?
        } else {
            evaluated
                .par_iter()
                .map(|ev| complete_from_estimates(None, ev, num_cases))
                .collect::<Result<_>>()?
        };

        let solution = self.screen_solutions(&evaluated);
        let metrics = self.metrics(&phenotypes, &evaluated, &records);
        Ok(Evaluation { generation: self.generation, plan, evaluated, records, metrics, solution })
    }

    // Full-tests, in population order, programs that passed every case they
    // were evaluated on. Testing is not charged to the budget.
    fn screen_solutions(&mut self, evaluated: &[Vec<(usize, f64)>]) -> Option<usize> {
        let Population::Gp { spec, programs } = &self.population else { return None };
        for (i, ev) in evaluated.iter().enumerate() {
            if ev.is_empty() || ev.iter().any(|&(_, s)| s != 1.0) {
                continue;
            }
            let taxon = self.taxa[i];
            if self.failed_candidates.contains(&taxon) {
                continue;
            }
            if check_solution(&programs[i], spec) {
                return Some(i);
            }
            self.failed_candidates.insert(taxon);
        }
        None
    }

    fn metrics(
        &self,
        phenotypes: &[DiagnosticPhenotype],
        evaluated: &[Vec<(usize, f64)>],
        records: &[ScoreRecord],
    ) -> MetricsRow {
        let depth = self.config.depth_limit;
        let (mut hits, mut failures, mut dist_sum) = (0u64, 0u64, 0u64);
        for r in records {
            for p in r.provenance() {
                if let Provenance::Estimated { distance } = *p {
                    if distance > depth {
                        failures += 1;
                    } else {
                        hits += 1;
                        dist_sum += distance as u64;
                    }
                }
            }
        }
        let (best_aggregate, satisfactory_coverage, best_train_pass_count) = match &self.population {
            Population::Diagnostic { .. } => (
                diagnostics::best_aggregate(phenotypes).unwrap_or(0.0),
                Some(diagnostics::satisfactory_trait_coverage(
                    phenotypes,
                    self.config.satisfaction_threshold,
                )),
                None,
            ),
            Population::Gp { .. } => (
                records.iter().map(aggregate_score).fold(0.0, f64::max),
                None,
                Some(
                    evaluated
                        .iter()
                        .map(|ev| ev.iter().filter(|&&(_, s)| s == 1.0).count())
                        .max()
                        .unwrap_or(0),
                ),
            ),
        };
        MetricsRow {
            generation: self.generation,
            evaluations_used: self.ledger.evaluations_used,
            best_aggregate,
            satisfactory_coverage,
            best_train_pass_count,
            num_taxa: self.phylo.len(),
            estimation_hits: hits,
            estimation_failures: failures,
            mean_estimate_distance: if hits > 0 { dist_sum as f64 / hits as f64 } else { 0.0 },
        }
    }

    /// Reproduction half of a generation: selects `pop_size` parents from the
    /// evaluation's records, replaces the population with mutated offspring,
    /// and updates the phylogeny. Returns the selected parent indices.
    pub fn advance(&mut self, eval: &Evaluation) -> Result<Vec<usize>> {
        let pop = self.pop_size();
        let parents = select_parents(
            &eval.records,
            &eval.plan,
            self.config.estimator.is_active(),
            pop,
            &mut self.rng,
        );
        let keys: Vec<GenotypeKey> = match &mut self.population {
            Population::Diagnostic { genomes, .. } => {
                let (rate, sigma) = (self.config.per_gene_rate, self.config.sigma);
                let next: Vec<NumericGenome> = parents
                    .iter()
                    .map(|&p| mutate_gaussian(&genomes[p], rate, sigma, self.rng.mutation()))
                    .collect();
                let keys = next.par_iter().map(genome_key).collect();
                *genomes = next;
                keys
            }
            Population::Gp { spec, programs } => {
                let next: Vec<LinearProgram> = parents
                    .iter()
                    .map(|&p| gp::mutate_program(&programs[p], &self.config.mutation, spec.max_len, self.rng.mutation()))
                    .collect();
                let keys = next.par_iter().map(|p| GenotypeKey(p.genotype_hash())).collect();
                *programs = next;
                keys
            }
        };

        self.generation += 1;
        self.phylo.set_generation(self.generation);
        let next_taxa = parents
            .iter()
            .zip(keys)
            .map(|(&p, k)| self.phylo.register_birth(k, Some(self.taxa[p])))
            .collect::<Result<Vec<_>>>()?;
        for &t in &self.taxa {
            self.phylo.register_death(t)?;
        }
        self.taxa = next_taxa;
        self.phylo.prune_extinct();
        if self.config.phylo_retention == Retention::Depth {
            self.phylo.trim_distant(self.config.depth_limit);
        }
        self.failed_candidates.retain(|t| self.phylo.contains(*t));
        self.ledger.generations_completed += 1;
        Ok(parents)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub success: bool,
    /// Generation in which a solution was found.
    pub solution_generation: Option<u64>,
    pub solution_program: Option<Vec<String>>,
    pub generations_completed: u64,
    pub evaluations_used: u64,
    pub final_metrics: Option<MetricsRow>,
    pub output_files: Vec<PathBuf>,
}

/// Contents of a run's `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub result: ExperimentResult,
}

pub fn read_summary(path: &std::path::Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Re-runs `config` up to the evaluation of `generation` and returns the
/// phylogeny as a snapshot taken at that point would record it.
pub fn replay_phylogeny(config: &ExperimentConfig, generation: u64) -> Result<Phylogeny> {
    let mut exp = Experiment::new(config.clone())?;
    loop {
        let eval = exp.evaluate()?;
        if exp.generation() >= generation {
            return Ok(exp.phylo);
        }
        exp.advance(&eval)?;
    }
}

/// Runs an experiment to its generation cap, budget, or (GP) first solution.
///
/// When `config.output_dir` is set, writes `metrics.csv`, phylogeny
/// snapshots under `phylogeny/`, and `summary.json` there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let mut exp = Experiment::new(config.clone())?;
    let mut out = match &config.output_dir {
        Some(dir) => Some(output::RunOutput::create(dir)?),
        None => None,
    };
    let mut last: Option<MetricsRow> = None;
    let mut solution: Option<(u64, Vec<String>)> = None;
    while exp.can_afford_generation() {
        let eval = exp.evaluate()?;
        if let Some(o) = out.as_mut() {
            o.write_metrics(&eval.metrics)?;
        }
        last = Some(eval.metrics.clone());
        if let Some(i) = eval.solution {
            let program = &exp.programs().expect("GP run")[i];
            solution = Some((eval.generation, program.instructions().iter().map(|x| x.to_string()).collect()));
            break;
        }
        if config.max_generations.is_some_and(|g| exp.generation() >= g) || !exp.can_afford_generation() {
            break;
        }
        if let Some(o) = out.as_mut() {
            if config.snapshot_interval > 0 && exp.generation() % config.snapshot_interval == 0 {
                o.write_snapshot(exp.phylogeny(), exp.generation())?;
            }
        }
        exp.advance(&eval)?;
    }
    let ledger = exp.ledger();
    let mut result = ExperimentResult {
        success: solution.is_some(),
        solution_generation: solution.as_ref().map(|s| s.0),
        solution_program: solution.map(|s| s.1),
        generations_completed: ledger.generations_completed,
        evaluations_used: ledger.evaluations_used,
        final_metrics: last,
        output_files: Vec::new(),
    };
    if let Some(mut o) = out {
        o.write_snapshot(exp.phylogeny(), exp.generation())?;
        o.finish()?;
        result.output_files = o.files();
        result.output_files.push(o.summary_path());
        let summary = RunSummary { config: config.clone(), result: result.clone() };
        o.write_summary(&serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(result)
}
