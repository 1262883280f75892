//! Flat `key = value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. A line `[run NAME]`
//! opens a named section (only meaningful in sweep manifests).

use std::path::PathBuf;

use phyloest::engine::{parse_estimator, parse_subsampling, ExperimentConfig, ProblemKind};
use phyloest::Error;

/// Keys understood by a single run.
pub const RUN_KEYS: &[&str] = &[
    "problem",
    "subsampling",
    "level",
    "estimator",
    "depth_limit",
    "pop_size",
    "max_generations",
    "max_evaluations",
    "seed",
    "output_dir",
    "snapshot_interval",
    "phylo_retention",
    "genome_length",
    "per_gene_rate",
    "sigma",
    "init_gene_max",
    "satisfaction_threshold",
    "problem_seed",
    "insertion_rate",
    "deletion_rate",
    "substitution_rate",
    "slip_rate",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Section {
    pub name: Option<String>,
    pub entries: Vec<(String, String)>,
}

/// Splits `text` into sections, rejecting keys outside `allowed` and keys
/// repeated within one section.
pub fn parse_sections(text: &str, allowed: &[&str]) -> Result<Vec<Section>, Error> {
    let mut sections = vec![Section::default()];
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = n + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = header
                .trim()
                .strip_prefix("run")
                .map(str::trim)
                .filter(|s| !s.is_empty() && !s.contains(['/', '\\']))
                .ok_or_else(|| Error::config(format!("line {lineno}: expected `[run NAME]`, got `{line}`")))?;
            if sections.iter().any(|s| s.name.as_deref() == Some(name)) {
                return Err(Error::config(format!("line {lineno}: duplicate section `{name}`")));
            }
            sections.push(Section { name: Some(name.to_string()), entries: Vec::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {lineno}: expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !allowed.contains(&key) {
            return Err(Error::config(format!("line {lineno}: unknown key `{key}`")));
        }
        let section = sections.last_mut().expect("base section");
        if section.entries.iter().any(|(k, _)| k == key) {
            return Err(Error::config(format!("line {lineno}: `{key}` given twice")));
        }
        section.entries.push((key.to_string(), value.to_string()));
    }
    Ok(sections)
}

/// Applies `entries` in order (later entries win) on top of the problem
/// family defaults.
pub fn build_config(entries: &[(String, String)]) -> Result<ExperimentConfig, Error> {
    let problem = entries
        .iter()
        .rev()
        .find(|(k, _)| k == "problem")
        .ok_or_else(|| Error::config("missing required field `problem`"))?;
    let mut config = ExperimentConfig::new(problem.1.parse::<ProblemKind>()?);
    for (key, value) in entries {
        apply(&mut config, key, value)?;
    }
    Ok(config)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Error> {
    value
        .parse()
        .map_err(|_| Error::config(format!("`{key}` has an invalid value `{value}`")))
}

fn optional(key: &str, value: &str) -> Result<Option<u64>, Error> {
    if value.eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

pub fn apply(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<(), Error> {
    match key {
        "problem" => {}
        "subsampling" => config.subsampling = parse_subsampling(value)?,
        "level" => config.level = num(key, value)?,
        "estimator" => config.estimator = parse_estimator(value)?,
        "depth_limit" => config.depth_limit = num(key, value)?,
        "pop_size" => config.pop_size = num(key, value)?,
        "max_generations" => config.max_generations = optional(key, value)?,
        "max_evaluations" => config.max_evaluations = optional(key, value)?,
        "seed" => config.seed = num(key, value)?,
        "output_dir" => config.output_dir = Some(PathBuf::from(value)),
        "snapshot_interval" => config.snapshot_interval = num(key, value)?,
        "phylo_retention" => config.phylo_retention = value.parse()?,
        "genome_length" => config.genome_length = num(key, value)?,
        "per_gene_rate" => config.per_gene_rate = num(key, value)?,
        "sigma" => config.sigma = num(key, value)?,
        "init_gene_max" => config.init_gene_max = num(key, value)?,
        "satisfaction_threshold" => config.satisfaction_threshold = num(key, value)?,
        "problem_seed" => config.problem_seed = num(key, value)?,
        "insertion_rate" => config.mutation.insertion = num(key, value)?,
        "deletion_rate" => config.mutation.deletion = num(key, value)?,
        "substitution_rate" => config.mutation.substitution = num(key, value)?,
        "slip_rate" => config.mutation.slip = num(key, value)?,
        _ => return Err(Error::config(format!("unknown key `{key}`"))),
    }
    Ok(())
}
