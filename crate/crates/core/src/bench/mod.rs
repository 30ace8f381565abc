//! Experiment pipelines, emitted files and the command-line front end.

pub mod cli;
pub mod plot;
mod studies;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use studies::{
    comparison_csv, gap_crossing, median, median_size_ratio, qd_vs_random, reach_study, repertoire_update,
    sample_targets, ComparisonRow, Crossing, CrossingRow, GapStudy, HistogramRow, ReachRow, ReachStudy, UpdateCurveRow,
    UpdateStudy,
};

use crate::adapt::{JacobianConfig, UpdateConfig};
use crate::error::{Error, Result};
use crate::evolve::{run_qd, QdConfig, RNG_ALGORITHM};
use crate::sim::{Domain, DomainConfig, DomainKind, GapConfig, SimDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    QdVsRandom,
    ReachStudy,
    GapCrossing,
    RepertoireUpdate,
}

/// Every tunable of a run. Each section falls back to its defaults, and the
/// domain section merges over the defaults of `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "QdConfig::desk")]
    pub qd: QdConfig,
    pub domain: DomainConfig,
    #[serde(default)]
    pub gap: GapConfig,
    /// Gap crossing and repertoire updates.
    #[serde(default)]
    pub jacobian: JacobianConfig,
    /// Goal reaching.
    #[serde(default = "reach_defaults")]
    pub reach: JacobianConfig,
    #[serde(default)]
    pub update: UpdateConfig,
    /// Goals for the reach study, actions for gap crossing, trials for updates.
    #[serde(default = "default_samples")]
    pub samples: Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Samples {
    pub targets: usize,
    pub actions: usize,
    pub trials: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            targets: 100,
            actions: 1000,
            trials: 50,
        }
    }
}

fn default_samples() -> Samples {
    Samples::default()
}

/// Goal-reaching settings: iteration cap 4.
pub fn reach_defaults() -> JacobianConfig {
    JacobianConfig::for_reach()
}

/// Stop tolerance of the reach study: a fiftieth of the domain's success
/// tolerance, so the iterations have room to improve on the nearest action.
pub fn reach_stop_tolerance(domain: &DomainConfig) -> f64 {
    domain.tolerance / 50.0
}

impl ExperimentConfig {
    pub fn for_kind(kind: DomainKind) -> Self {
        Self {
            qd: QdConfig::desk(),
            domain: DomainConfig::for_kind(kind),
            gap: GapConfig::default(),
            jacobian: JacobianConfig::default(),
            reach: reach_defaults(),
            update: UpdateConfig::default(),
            samples: Samples::default(),
        }
    }

    /// Parses a JSON config; the `domain` section may be partial and its
    /// `kind` overrides `kind`.
    pub fn from_json(text: &str, kind: DomainKind) -> Result<Self> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
        let domain = match obj.remove("domain") {
            Some(d) => {
                let kind_in = d.get("kind").cloned();
                let kind = match kind_in {
                    Some(k) => serde_json::from_value(k).map_err(|e| Error::Config(format!("domain.kind: {e}")))?,
                    None => kind,
                };
                let mut d = d;
                if let Some(m) = d.as_object_mut() {
                    m.insert("kind".into(), serde_json::to_value(kind).expect("kind serializes"));
                }
                DomainConfig::from_json(&d.to_string())?
            }
            None => DomainConfig::for_kind(kind),
        };
        obj.insert(
            "domain".into(),
            serde_json::to_value(&domain).expect("domain serializes"),
        );
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.qd.validate()?;
        self.domain.validate()?;
        self.gap.validate_for(self.domain.joint_count())?;
        self.jacobian.validate()?;
        self.reach.validate()?;
        Ok(())
    }

    pub fn sim(&self) -> Result<SimDomain> {
        SimDomain::new(self.domain.clone(), GapConfig::none())
    }

    pub fn real(&self) -> Result<SimDomain> {
        SimDomain::new(self.domain.clone(), self.gap.clone())
    }

    /// Reach settings with the stop tolerance filled in.
    pub fn reach_config(&self) -> JacobianConfig {
        JacobianConfig {
            tolerance: self.reach.tolerance.or(Some(reach_stop_tolerance(&self.domain))),
            ..self.reach.clone()
        }
    }
}

/// One batch of experiment runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub repetitions: usize,
    pub seeds: Vec<u64>,
    pub config: ExperimentConfig,
    pub out: PathBuf,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetition count must be at least 1".into()));
        }
        if self.seeds.len() != self.repetitions {
            return Err(Error::Config(format!(
                "{} seeds given for {} repetitions",
                self.seeds.len(),
                self.repetitions
            )));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.config.validate()
    }

    /// Runs every repetition, each in its own `seed_<n>` directory.
    pub fn run(&self) -> Result<()> {
        self.validate()?;
        let sim = self.config.sim()?;
        let real = self.config.real()?;
        fs::create_dir_all(&self.out)?;
        if self.kind == ExperimentKind::QdVsRandom {
            let start = Instant::now();
            let rows = qd_vs_random(&self.config.qd, &sim, &self.seeds)?;
            fs::write(self.out.join("qd_vs_random.csv"), comparison_csv(&rows)?)?;
            let seed = self.seeds[0];
            return Metadata::new(&self.config, &sim, seed, start).write(&self.out);
        }
        for &seed in &self.seeds {
            let start = Instant::now();
            let dir = self.out.join(format!("seed_{seed}"));
            fs::create_dir_all(&dir)?;
            let qd = QdConfig {
                seed,
                ..self.config.qd.clone()
            };
            let (rep, report) = run_qd(&qd, &sim)?;
            rep.save(dir.join("repertoire.jsonl"))?;
            fs::write(dir.join("report.csv"), report.to_csv())?;
            let samples = &self.config.samples;
            match self.kind {
                ExperimentKind::QdVsRandom => unreachable!(),
                ExperimentKind::ReachStudy => {
                    let targets = sample_targets(&rep, samples.targets, seed)?;
                    let study = reach_study(&rep, &targets, &sim, &self.config.reach_config())?;
                    write_reach(&dir, &study)?;
                }
                ExperimentKind::GapCrossing => {
                    let study = gap_crossing(&rep, &real, samples.actions.min(rep.len()), seed, &self.config.jacobian)?;
                    write_gap(&dir, &study, self.config.jacobian.max_iterations)?;
                }
                ExperimentKind::RepertoireUpdate => {
                    let study = repertoire_update(
                        &rep,
                        &real,
                        samples.trials,
                        seed,
                        &self.config.jacobian,
                        &self.config.update,
                    )?;
                    fs::write(dir.join("update_curves.csv"), study.csv()?)?;
                }
            }
            Metadata::new(&self.config, &sim, seed, start).write(&dir)?;
        }
        Ok(())
    }
}

/// Provenance written next to every run's outputs. Everything except
/// `wall_time_s` is a function of the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: serde_json::Value,
    pub domain: String,
    pub domain_config_hash: String,
    pub seed: u64,
    pub rng_algorithm: String,
    pub wall_time_s: f64,
}

impl Metadata {
    pub fn new<C: Serialize, D: Domain + ?Sized>(config: &C, domain: &D, seed: u64, start: Instant) -> Self {
        Self {
            config: serde_json::to_value(config).expect("config serializes"),
            domain: domain.name().to_string(),
            domain_config_hash: domain.config_hash(),
            seed,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(dir.join("metadata.json"), text + "\n")?;
        Ok(())
    }
}

pub fn write_reach(dir: &Path, study: &ReachStudy) -> Result<()> {
    fs::write(dir.join("reach_summary.csv"), study.summary_csv()?)?;
    let traces = dir.join("traces");
    fs::create_dir_all(&traces)?;
    for (i, t) in study.traces.iter().enumerate() {
        fs::write(traces.join(format!("target_{i:04}.json")), t.to_json() + "\n")?;
    }
    Ok(())
}

pub fn write_gap(dir: &Path, study: &GapStudy, max_iterations: usize) -> Result<()> {
    fs::write(dir.join("gap_crossing.csv"), study.rows_csv()?)?;
    fs::write(dir.join("gap_histogram.csv"), study.histogram_csv(max_iterations)?)?;
    Ok(())
}
