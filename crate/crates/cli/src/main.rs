mod config_file;
mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phyloest::engine::{read_summary, replay_phylogeny, run_experiment, ExperimentConfig};
use phyloest::gp::{build_problem, write_cases, ProblemName};
use phyloest::{Error, RngStream};
use rayon::prelude::*;

use crate::config_file::{build_config, parse_sections, RUN_KEYS};
use crate::sweep::Outcome;

const OUTPUT_ROOT_ENV: &str = "PHYLOEST_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "phyloest", version, about = "Phylogeny-informed fitness estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run(Box<RunArgs>),
    /// Run every configuration in a manifest and collect a sweep CSV.
    Sweep {
        manifest: PathBuf,
        /// Parallel runs (defaults to the manifest's `workers`, then all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory under which run directories are created.
        #[arg(long)]
        output_root: Option<PathBuf>,
        /// Sweep CSV path (default OUTPUT_ROOT/sweep.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write training and testing cases for a GP problem.
    GenProblem {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for NAME_train.csv and NAME_test.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write the phylogeny snapshot of a finished run at some generation,
    /// replaying the run when that generation was not recorded.
    ExportPhylo {
        run_dir: PathBuf,
        /// Defaults to the last recorded snapshot.
        #[arg(long)]
        generation: Option<u64>,
        /// Destination file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    subsampling: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    depth_limit: Option<String>,
    #[arg(long)]
    pop_size: Option<String>,
    #[arg(long)]
    max_generations: Option<String>,
    #[arg(long)]
    max_evaluations: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    snapshot_interval: Option<String>,
    /// Run directory; overrides the file's `output_dir`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Any other configuration key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>, Error> {
        let mut out = Vec::new();
        let flags = [
            ("problem", &self.problem),
            ("subsampling", &self.subsampling),
            ("level", &self.level),
            ("estimator", &self.estimator),
            ("depth_limit", &self.depth_limit),
            ("pop_size", &self.pop_size),
            ("max_generations", &self.max_generations),
            ("max_evaluations", &self.max_evaluations),
            ("seed", &self.seed),
            ("snapshot_interval", &self.snapshot_interval),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                out.push((key.to_string(), v.clone()));
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            let k = k.trim();
            if !RUN_KEYS.contains(&k) {
                return Err(Error::config(format!("unknown key `{k}`")));
            }
            out.push((k.to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn resolve_run_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut entries = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
            let mut sections = parse_sections(&text, RUN_KEYS)?;
            if sections.len() > 1 {
                return Err(Error::config("`[run ...]` sections are only allowed in sweep manifests"));
            }
            sections.remove(0).entries
        }
        None => Vec::new(),
    };
    entries.extend(args.overrides()?);
    let mut config = build_config(&entries)?;
    if let Some(dir) = &args.output {
        config.output_dir = Some(dir.clone());
    } else if config.output_dir.is_none() {
        config.output_dir =
            Some(output_root().join(config.condition_label()).join(format!("seed_{}", config.seed)));
    }
    config.validate()?;
    Ok(config)
}

fn cmd_run(args: &RunArgs) -> Result<(), Error> {
    let config = resolve_run_config(args)?;
    let result = run_experiment(&config)?;
    let dir = config.output_dir.as_deref().unwrap_or(Path::new("."));
    println!(
        "{} seed {}: generations {} evaluations {} success {} -> {}",
        config.condition_label(),
        config.seed,
        result.generations_completed,
        result.evaluations_used,
        result.success,
        dir.display()
    );
    Ok(())
}

fn cmd_sweep(
    manifest: &Path,
    jobs: Option<usize>,
    root: Option<&Path>,
    out: Option<&Path>,
) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(manifest)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", manifest.display())))?;
    let plan = sweep::plan(&text, root, &output_root())?;
    let workers = jobs.or(plan.workers).unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Io(io::Error::other(e)))?;
    let outcomes: Vec<Outcome> = pool.install(|| plan.runs.par_iter().map(sweep::execute).collect());

    fs::create_dir_all(&plan.output_root)?;
    let csv_path = out.map_or_else(|| plan.output_root.join("sweep.csv"), Path::to_path_buf);
    let mut w = csv::Writer::from_path(&csv_path)?;
    let (mut config_failures, mut runtime_failures) = (0, 0);
    for (run, outcome) in plan.runs.iter().zip(&outcomes) {
        match outcome {
            Outcome::Done(_) => {}
            Outcome::ConfigError(e) => {
                config_failures += 1;
                eprintln!("run `{}` rejected: {e}", run.name);
            }
            Outcome::RuntimeError(e) => {
                runtime_failures += 1;
                eprintln!("run `{}` failed: {e}", run.name);
            }
        }
        w.serialize(sweep::row(run, outcome))?;
    }
    w.flush()?;
    println!(
        "{} runs, {} failed -> {}",
        plan.runs.len(),
        config_failures + runtime_failures,
        csv_path.display()
    );
    Ok(if config_failures > 0 {
        ExitCode::from(1)
    } else if runtime_failures > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_gen_problem(name: &str, seed: u64, out: &Path) -> Result<(), Error> {
    let problem: ProblemName = name.parse()?;
    let spec = build_problem(problem, RngStream::new(seed).init());
    fs::create_dir_all(out)?;
    for (suffix, cases) in [("train", &spec.training), ("test", &spec.testing)] {
        let path = out.join(format!("{}_{suffix}.csv", problem.as_str()));
        write_cases(cases, fs::File::create(&path)?)?;
        println!("{}: {} cases", path.display(), cases.len());
    }
    Ok(())
}

fn snapshot_generation(path: &Path) -> Option<u64> {
    path.file_name()?.to_str()?.strip_prefix("phylo_gen")?.strip_suffix(".csv")?.parse().ok()
}

fn cmd_export_phylo(run_dir: &Path, generation: Option<u64>, out: Option<&Path>) -> Result<(), Error> {
    let snap_dir = run_dir.join("phylogeny");
    let recorded: Vec<(u64, PathBuf)> = match fs::read_dir(&snap_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok())
            .filter_map(|e| snapshot_generation(&e.path()).map(|g| (g, e.path())))
            .collect(),
        Err(_) => Vec::new(),
    };
    let bytes = match generation {
        None => {
            let (_, path) = recorded
                .iter()
                .max_by_key(|(g, _)| *g)
                .ok_or_else(|| Error::config(format!("no snapshots in {}", snap_dir.display())))?;
            fs::read(path)?
        }
        Some(g) => match recorded.iter().find(|(rg, _)| *rg == g) {
            Some((_, path)) => fs::read(path)?,
            None => {
                let summary = read_summary(&run_dir.join("summary.json"))
                    .map_err(|e| Error::config(format!("cannot replay {}: {e}", run_dir.display())))?;
                let last = summary.result.final_metrics.as_ref().map_or(0, |m| m.generation);
                if g > last {
                    return Err(Error::config(format!("run ended at generation {last}, asked for {g}")));
                }
                let mut buf = Vec::new();
                replay_phylogeny(&summary.config, g)?.write_snapshot(&mut buf)?;
                buf
            }
        },
    };
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_config() { 1 } else { 2 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep { manifest, jobs, output_root, out } => {
            cmd_sweep(manifest, *jobs, output_root.as_deref(), out.as_deref())
        }
        Command::GenProblem { name, seed, out } => cmd_gen_problem(name, *seed, out).map(|()| ExitCode::SUCCESS),
        Command::ExportPhylo { run_dir, generation, out } => {
            cmd_export_phylo(run_dir, *generation, out.as_deref()).map(|()| ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
