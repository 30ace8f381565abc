//! `qd-reach <evolve|reach|gapsim|update|stats>`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 runtime
//! experiment failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use super::{
    gap_crossing, plot, reach_study, repertoire_update, sample_targets, write_gap, write_reach, ExperimentConfig,
    Metadata,
};
use crate::archive::Repertoire;
use crate::error::{Error, Result};
use crate::evolve::{run_qd, run_random_baseline, QdConfig};
use crate::sim::{Domain, DomainKind, GapConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "qd-reach",
    version,
    about = "Quality-diversity action repertoires with local Jacobian adaptation"
)]
pub struct Cli {
    /// JSON experiment config (sections: qd, domain, gap, jacobian, reach, update, samples).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = DomainArg::Throw)]
    pub domain: DomainArg,
    /// JSON gap config: {"joint_offsets": [...], "release_delay": s}.
    #[arg(long, global = true)]
    pub gap: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    Throw,
    Lever,
}

impl From<DomainArg> for DomainKind {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Throw => DomainKind::Throw,
            DomainArg::Lever => DomainKind::Lever,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Random,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a repertoire.
    Evolve {
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        #[arg(long)]
        generations: Option<usize>,
    },
    /// Reach one goal or a batch of sampled goals.
    Reach {
        #[arg(long)]
        repertoire: PathBuf,
        /// Comma-separated control-space goal, e.g. `0.4,-0.2`.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        /// Number of sampled goals when no target is given.
        #[arg(long)]
        targets: Option<usize>,
    },
    /// Cross the configured gap for sampled repertoire actions.
    Gapsim {
        #[arg(long)]
        repertoire: PathBuf,
        /// Number of sampled actions.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Sequential trials with full and action-only repertoire updates.
    Update {
        #[arg(long)]
        repertoire: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// SVG plots of a repertoire and of curve CSVs.
    Stats {
        #[arg(long)]
        repertoire: Option<PathBuf>,
        #[arg(long = "csv")]
        csvs: Vec<PathBuf>,
    },
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: Error,
}

fn usage(error: Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> Failure {
    let code = match error {
        Error::Config(_) | Error::Parse { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    };
    Failure { code, error }
}

/// Parses a comma-separated list of exactly `dims` finite numbers.
pub fn parse_target(text: &str, dims: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("target component {s:?} is not a finite number")))
        })
        .collect::<Result<_>>()?;
    if values.len() != dims {
        return Err(Error::Config(format!(
            "target needs {dims} components, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let kind = DomainKind::from(cli.domain);
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text, kind)?
        }
        None => ExperimentConfig::for_kind(kind),
    };
    if let Some(p) = &cli.gap {
        let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        cfg.gap = GapConfig::from_json(&text)?;
    }
    cfg.qd.seed = cli.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn load_repertoire<D: Domain + ?Sized>(path: &Path, domain: &D) -> Result<Repertoire> {
    let rep = Repertoire::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("{}: {io}", path.display())),
        other => other,
    })?;
    if rep.genotype_dim() != domain.genotype_dim() || rep.behavior_bounds() != domain.behavior_bounds().as_slice() {
        return Err(Error::Config(format!(
            "{} was not built for the {} domain with this configuration",
            path.display(),
            domain.name()
        )));
    }
    Ok(rep)
}

fn prepare_out(out: &Path) -> std::result::Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| usage(Error::Config(format!("{}: {e}", out.display()))))
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("qd-reach: {}", f.error);
            f.code
        }
    }
}

pub fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let start = Instant::now();
    let cfg = load_config(cli).map_err(usage)?;
    let sim = cfg.sim().map_err(usage)?;
    let out = &cli.out;
    match &cli.command {
        Command::Evolve { baseline, generations } => {
            let qd = QdConfig {
                generations: generations.unwrap_or(cfg.qd.generations),
                ..cfg.qd.clone()
            };
            qd.validate().map_err(usage)?;
            prepare_out(out)?;
            let (rep, report) = match baseline {
                Some(Baseline::Random) => run_random_baseline(&qd, &sim),
                None => run_qd(&qd, &sim),
            }
            .map_err(runtime)?;
            rep.save(out.join("repertoire.jsonl")).map_err(runtime)?;
            fs::write(out.join("report.csv"), report.to_csv()).map_err(|e| runtime(e.into()))?;
            let used = ExperimentConfig { qd, ..cfg.clone() };
            Metadata::new(&used, &sim, cli.seed, start)
                .write(out)
                .map_err(runtime)?;
        }
        Command::Reach {
            repertoire,
            target,
            targets,
        } => {
            let rep = load_repertoire(repertoire, &sim).map_err(usage)?;
            let goals = match target {
                Some(t) => {
                    let g = parse_target(t, rep.control_dims().len()).map_err(usage)?;
                    for (v, &d) in g.iter().zip(rep.control_dims()) {
                        let (lo, hi) = rep.behavior_bounds()[d];
                        if !(lo..=hi).contains(v) {
                            return Err(usage(Error::Config(format!("target {v} outside [{lo}, {hi}]"))));
                        }
                    }
                    vec![g]
                }
                None => sample_targets(&rep, targets.unwrap_or(cfg.samples.targets), cli.seed).map_err(runtime)?,
            };
            prepare_out(out)?;
            let study = reach_study(&rep, &goals, &sim, &cfg.reach_config()).map_err(runtime)?;
            write_reach(out, &study).map_err(runtime)?;
            Metadata::new(&cfg, &sim, cli.seed, start).write(out).map_err(runtime)?;
        }
        Command::Gapsim { repertoire, trials } => {
            let rep = load_repertoire(repertoire, &sim).map_err(usage)?;
            let real = cfg.real().map_err(usage)?;
            let n = trials.unwrap_or(cfg.samples.actions.min(rep.len()));
            prepare_out(out)?;
            let study = gap_crossing(&rep, &real, n, cli.seed, &cfg.jacobian).map_err(runtime)?;
            write_gap(out, &study, cfg.jacobian.max_iterations).map_err(runtime)?;
            Metadata::new(&cfg, &real, cli.seed, start)
                .write(out)
                .map_err(runtime)?;
        }
        Command::Update { repertoire, trials } => {
            let rep = load_repertoire(repertoire, &sim).map_err(usage)?;
            let real = cfg.real().map_err(usage)?;
            let n = trials.unwrap_or(cfg.samples.trials);
            prepare_out(out)?;
            let study = repertoire_update(&rep, &real, n, cli.seed, &cfg.jacobian, &cfg.update).map_err(runtime)?;
            fs::write(out.join("update_curves.csv"), study.csv().map_err(runtime)?).map_err(|e| runtime(e.into()))?;
            Metadata::new(&cfg, &real, cli.seed, start)
                .write(out)
                .map_err(runtime)?;
        }
        Command::Stats { repertoire, csvs } => {
            let rep = match repertoire {
                Some(p) => Some(load_repertoire(p, &sim).map_err(usage)?),
                None => None,
            };
            let mut plots = Vec::new();
            for p in csvs {
                let text = fs::read_to_string(p).map_err(|e| usage(Error::Config(format!("{}: {e}", p.display()))))?;
                let stem = p
                    .file_stem()
                    .map_or("curves".into(), |s| s.to_string_lossy().into_owned());
                plots.push((format!("{stem}.svg"), plot::curves_svg(&stem, &text).map_err(usage)?));
            }
            prepare_out(out)?;
            if let Some(rep) = rep {
                fs::write(out.join("coverage.svg"), plot::coverage_svg(&rep)).map_err(|e| runtime(e.into()))?;
            }
            for (name, svg) in plots {
                fs::write(out.join(name), svg).map_err(|e| runtime(e.into()))?;
            }
        }
    }
    Ok(())
}
