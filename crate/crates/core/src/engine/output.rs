use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::phylogeny::Phylogeny;

pub const METRICS_HEADER: [&str; 9] = [
    "generation",
    "evaluations_used",
    "best_aggregate",
    "satisfactory_coverage",
    "best_train_pass_count",
    "num_taxa",
    "estimation_hits",
    "estimation_failures",
    "mean_estimate_distance",
];

/// One row of the per-generation metrics file. Problem-specific columns are
/// left empty when they do not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub generation: u64,
    pub evaluations_used: u64,
    pub best_aggregate: f64,
    pub satisfactory_coverage: Option<usize>,
    pub best_train_pass_count: Option<usize>,
    pub num_taxa: usize,
    pub estimation_hits: u64,
    pub estimation_failures: u64,
    pub mean_estimate_distance: f64,
}

pub(crate) struct RunOutput {
    dir: PathBuf,
    metrics: csv::Writer<BufWriter<File>>,
    snapshots: Vec<PathBuf>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("phylogeny"))?;
        let metrics = csv::WriterBuilder::new()
            .has_headers(true)
            .from_writer(BufWriter::new(File::create(dir.join("metrics.csv"))?));
        Ok(RunOutput { dir: dir.to_path_buf(), metrics, snapshots: Vec::new() })
    }

    pub fn write_metrics(&mut self, row: &MetricsRow) -> Result<()> {
        self.metrics.serialize(row)?;
        Ok(())
    }

    pub fn write_snapshot(&mut self, phylo: &Phylogeny, generation: u64) -> Result<()> {
        let path = self.dir.join("phylogeny").join(format!("phylo_gen{generation:06}.csv"));
        if self.snapshots.contains(&path) {
            return Ok(());
        }
        let mut w = BufWriter::new(File::create(&path)?);
        phylo.write_snapshot(&mut w)?;
        w.flush()?;
        self.snapshots.push(path);
        Ok(())
    }

    pub fn finish(&mut self) -> Result<()> {
        self.metrics.flush()?;
        Ok(())
    }

    pub fn files(&self) -> Vec<PathBuf> {
        let mut v = vec![self.dir.join("metrics.csv")];
        v.extend(self.snapshots.iter().cloned());
        v
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join("summary.json")
    }

    pub fn write_summary(&self, json: &str) -> Result<()> {
        fs::write(self.summary_path(), json)?;
        Ok(())
    }
}
