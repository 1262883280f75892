//! Contradictory-objectives and multi-path exploration diagnostics.
//!
//! Both translate a [`NumericGenome`] into a phenotype of the same length in
//! which only "active" genes are expressed; every trait is one training case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::NumericGenome;

/// Trait value above which a contradictory-objectives trait counts as
/// satisfied.
pub const SATISFACTION_THRESHOLD: f64 = 96.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostic {
    Contradictory,
    Multipath,
}

impl Diagnostic {
    pub fn translate(self, genome: &NumericGenome) -> DiagnosticPhenotype {
        match self {
            Diagnostic::Contradictory => translate_contradictory(genome),
            Diagnostic::Multipath => translate_multipath(genome),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticPhenotype {
    traits: Vec<f64>,
    active: Vec<bool>,
}

impl DiagnosticPhenotype {
    pub fn traits(&self) -> &[f64] {
        &self.traits
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    pub fn total(&self) -> f64 {
        self.traits.iter().sum()
    }
}

/// First index holding the largest gene; 0 for an empty genome.
fn activation_site(genes: &[f64]) -> usize {
    let mut best = 0;
    for (i, &g) in genes.iter().enumerate() {
        if g > genes[best] {
            best = i;
        }
    }
    best
}

fn express(genes: &[f64], region: std::ops::Range<usize>) -> DiagnosticPhenotype {
    let mut traits = vec![0.0; genes.len()];
    let mut active = vec![false; genes.len()];
    for i in region {
        traits[i] = genes[i];
        active[i] = true;
    }
    DiagnosticPhenotype { traits, active }
}

/// Only the (first) maximum gene is expressed.
pub fn translate_contradictory(genome: &NumericGenome) -> DiagnosticPhenotype {
    let genes = genome.genes();
    if genes.is_empty() {
        return express(genes, 0..0);
    }
    let site = activation_site(genes);
    express(genes, site..site + 1)
}

/// Expresses the non-increasing run of genes starting at the (first) maximum.
pub fn translate_multipath(genome: &NumericGenome) -> DiagnosticPhenotype {
    let genes = genome.genes();
    if genes.is_empty() {
        return express(genes, 0..0);
    }
    let site = activation_site(genes);
    let mut end = site + 1;
    while end < genes.len() && genes[end] <= genes[end - 1] {
        end += 1;
    }
    express(genes, site..end)
}

/// Number of trait positions on which at least one phenotype exceeds
/// `threshold`.
pub fn satisfactory_trait_coverage(population: &[DiagnosticPhenotype], threshold: f64) -> usize {
    let Some(len) = population.iter().map(|p| p.traits.len()).max() else {
        return 0;
    };
    (0..len)
        .filter(|&i| population.iter().any(|p| p.traits.get(i).is_some_and(|&t| t > threshold)))
        .count()
}

/// Largest trait sum in the population.
pub fn best_aggregate(population: &[DiagnosticPhenotype]) -> Result<f64> {
    population
        .iter()
        .map(DiagnosticPhenotype::total)
        .reduce(f64::max)
        .ok_or(Error::EmptyPopulation)
}
