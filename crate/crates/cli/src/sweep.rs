//! Batch runs described by a manifest.
//!
//! A manifest holds base keys followed by optional `[run NAME]` sections.
//! Any value may be a comma-separated list; each section expands to the
//! cartesian product of its lists (base keys first, last key varying
//! fastest). Besides the run keys, the base section accepts `output_root` and
//! `workers`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use phyloest::engine::{estimator_str, run_experiment, subsampling_str, ExperimentConfig, ExperimentResult};
use phyloest::Error;
use serde::Serialize;

use crate::config_file::{build_config, parse_sections, Section, RUN_KEYS};

#[derive(Clone, Debug)]
pub struct PlannedRun {
    pub name: String,
    /// The configuration, or the reason it is invalid.
    pub config: Result<ExperimentConfig, String>,
    pub entries: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub runs: Vec<PlannedRun>,
    pub output_root: PathBuf,
    pub workers: Option<usize>,
}

fn expand(entries: &[(String, String)]) -> Vec<Vec<(String, String)>> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, value) in entries {
        let options: Vec<&str> = value.split(',').map(str::trim).collect();
        combos = combos
            .into_iter()
            .flat_map(|c| {
                options.iter().map(move |o| {
                    let mut c = c.clone();
                    c.push((key.clone(), o.to_string()));
                    c
                })
            })
            .collect();
    }
    combos
}

/// Parses a manifest and lays out one output directory per run under
/// `root` (`root/NAME/CONDITION/seed_SEED`).
pub fn plan(text: &str, root_override: Option<&Path>, default_root: &Path) -> Result<Manifest, Error> {
    let mut allowed: Vec<&str> = RUN_KEYS.iter().copied().filter(|&k| k != "output_dir").collect();
    allowed.extend(["output_root", "workers"]);
    let mut sections = parse_sections(text, &allowed)?;
    let mut base = sections.remove(0);

    let mut output_root = None;
    let mut workers = None;
    base.entries.retain(|(k, v)| match k.as_str() {
        "output_root" => {
            output_root = Some(PathBuf::from(v));
            false
        }
        "workers" => {
            workers = Some(v.clone());
            false
        }
        _ => true,
    });
    for s in &sections {
        if let Some((k, _)) = s.entries.iter().find(|(k, _)| k == "output_root" || k == "workers") {
            return Err(Error::config(format!("`{k}` belongs before the first section")));
        }
    }
    let workers = workers
        .map(|w| {
            w.parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::config("`workers` must be a positive integer"))
        })
        .transpose()?;
    let root = root_override
        .map(Path::to_path_buf)
        .or(output_root)
        .unwrap_or_else(|| default_root.to_path_buf());

    if sections.is_empty() {
        sections.push(Section { name: Some("default".to_string()), entries: Vec::new() });
    }
    let mut runs = Vec::new();
    let mut dirs = HashSet::new();
    for section in &sections {
        let name = section.name.clone().expect("named section");
        // section keys replace base keys of the same name
        let mut entries: Vec<(String, String)> = base
            .entries
            .iter()
            .filter(|(k, _)| !section.entries.iter().any(|(sk, _)| sk == k))
            .cloned()
            .collect();
        entries.extend(section.entries.iter().cloned());
        for combo in expand(&entries) {
            let config = match build_config(&combo) {
                Ok(mut c) => {
                    let dir = root.join(&name).join(c.condition_label()).join(format!("seed_{}", c.seed));
                    if !dirs.insert(dir.clone()) {
                        return Err(Error::config(format!(
                            "run `{name}` expands to two configurations sharing {}; split them into named runs",
                            dir.display()
                        )));
                    }
                    c.output_dir = Some(dir);
                    c.validate().map(|()| c).map_err(|e| e.to_string())
                }
                Err(e) => Err(e.to_string()),
            };
            runs.push(PlannedRun { name: name.clone(), config, entries: combo });
        }
    }
    Ok(Manifest { runs, output_root: root, workers })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub run: String,
    pub problem: String,
    pub subsampling: String,
    pub level: String,
    pub estimator: String,
    pub seed: String,
    pub status: &'static str,
    pub success: Option<bool>,
    pub solution_generation: Option<u64>,
    pub generations_completed: Option<u64>,
    pub evaluations_used: Option<u64>,
    pub best_aggregate: Option<f64>,
    pub satisfactory_coverage: Option<usize>,
    pub best_train_pass_count: Option<usize>,
    pub output_dir: String,
    pub error: String,
}

fn raw<'a>(entries: &'a [(String, String)], key: &str) -> &'a str {
    entries.iter().rev().find(|(k, _)| k == key).map_or("", |(_, v)| v.as_str())
}

/// Outcome of one planned run, flagged as a configuration or runtime failure.
pub enum Outcome {
    Done(ExperimentResult),
    ConfigError(String),
    RuntimeError(String),
}

pub fn execute(run: &PlannedRun) -> Outcome {
    match &run.config {
        Err(e) => Outcome::ConfigError(e.clone()),
        Ok(c) => match run_experiment(c) {
            Ok(r) => Outcome::Done(r),
            Err(e) if e.is_config() => Outcome::ConfigError(e.to_string()),
            Err(e) => Outcome::RuntimeError(e.to_string()),
        },
    }
}

pub fn row(run: &PlannedRun, outcome: &Outcome) -> SweepRow {
    let (problem, subsampling, level, estimator, seed, dir) = match &run.config {
        Ok(c) => (
            c.problem.to_string(),
            subsampling_str(c.subsampling).to_string(),
            c.level.to_string(),
            estimator_str(c.estimator).to_string(),
            c.seed.to_string(),
            c.output_dir.as_ref().map(|d| d.display().to_string()).unwrap_or_default(),
        ),
        Err(_) => {
            let e = &run.entries;
            let f = |k| raw(e, k).to_string();
            (f("problem"), f("subsampling"), f("level"), f("estimator"), f("seed"), String::new())
        }
    };
    let mut row = SweepRow {
        run: run.name.clone(),
        problem,
        subsampling,
        level,
        estimator,
        seed,
        status: "failed",
        success: None,
        solution_generation: None,
        generations_completed: None,
        evaluations_used: None,
        best_aggregate: None,
        satisfactory_coverage: None,
        best_train_pass_count: None,
        output_dir: dir,
        error: String::new(),
    };
    match outcome {
        Outcome::Done(r) => {
            row.status = "ok";
            row.success = Some(r.success);
            row.solution_generation = r.solution_generation;
            row.generations_completed = Some(r.generations_completed);
            row.evaluations_used = Some(r.evaluations_used);
            if let Some(m) = &r.final_metrics {
                row.best_aggregate = Some(m.best_aggregate);
                row.satisfactory_coverage = m.satisfactory_coverage;
                row.best_train_pass_count = m.best_train_pass_count;
            }
        }
        Outcome::ConfigError(e) | Outcome::RuntimeError(e) => row.error = e.clone(),
    }
    row
}
