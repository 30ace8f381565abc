//! The novelty-driven repertoire search and its uniform-random baseline.

mod operators;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use operators::{
    novelty_weights, poly_mutation, random_genotype, sample_weighted, sbx_crossover, select_parents, SELECTION_DELTA,
};

use crate::archive::{metrics, Behavior, Candidate, Genotype, InsertOutcome, Repertoire};
use crate::error::{Error, Result};
use crate::sim::{Domain, Evaluation};

pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Which behavior dimensions feed the novelty estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoveltyDims {
    #[default]
    Full,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QdConfig {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    /// Insertion threshold; `None` takes the domain default.
    pub l_repertoire: Option<f64>,
    pub epsilon_q: f64,
    pub seed: u64,
    pub rng_algorithm: String,
    /// Random populations tried before giving up on finding a valid action.
    pub seeding_cap: usize,
    pub novelty_dims: NoveltyDims,
    /// Also select parents among the previous generation's valid offspring.
    pub select_from_population: bool,
}

impl Default for QdConfig {
    fn default() -> Self {
        Self {
            population_size: 240,
            generations: 2000,
            mutation_rate: 0.2,
            crossover_rate: 0.1,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            l_repertoire: None,
            epsilon_q: 1e-3,
            seed: 0,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            seeding_cap: 100,
            novelty_dims: NoveltyDims::Full,
            select_from_population: false,
        }
    }
}

impl QdConfig {
    /// Desk-scale budget: 200 generations.
    pub fn desk() -> Self {
        Self {
            generations: 200,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        for (name, v) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.sbx_eta >= 0.0 && self.mutation_eta >= 0.0) {
            return bad("distribution indices must be non-negative".into());
        }
        if !(self.epsilon_q >= 0.0 && self.epsilon_q.is_finite()) {
            return bad("epsilon_q must be non-negative".into());
        }
        if let Some(l) = self.l_repertoire {
            if !(l >= 0.0 && l.is_finite()) {
                return bad("l_repertoire must be non-negative".into());
            }
        }
        if self.rng_algorithm != RNG_ALGORITHM {
            return bad(format!("unsupported rng_algorithm {:?}", self.rng_algorithm));
        }
        if self.seeding_cap == 0 {
            return bad("seeding_cap must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub archive_size: usize,
    pub mean_quality: f64,
    pub evaluations_used: usize,
    pub invalid_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    /// Evaluations spent on random seeding populations.
    pub seeding_evaluations: usize,
    pub seeding_generations: usize,
    pub records: Vec<GenerationRecord>,
}

impl RunReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record([
            "generation",
            "archive_size",
            "mean_quality",
            "evaluations_used",
            "invalid_count",
        ])?;
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Parses the CSV written by [`RunReport::write_csv`]. Seeding counts are
    /// not part of the file and come back as zero.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        let expected = [
            "generation",
            "archive_size",
            "mean_quality",
            "evaluations_used",
            "invalid_count",
        ];
        if headers.iter().ne(expected) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("unexpected header {headers:?}"),
            });
        }
        let mut records = Vec::new();
        for (i, row) in rdr.deserialize().enumerate() {
            let r: GenerationRecord = row.map_err(|e| Error::Parse {
                line: i + 2,
                msg: e.to_string(),
            })?;
            records.push(r);
        }
        Ok(Self {
            records,
            ..Self::default()
        })
    }

    pub fn final_archive_size(&self) -> Option<usize> {
        self.records.last().map(|r| r.archive_size)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Variation {
    Novelty,
    Random,
}

/// Runs the novelty-driven search.
pub fn run_qd<D: Domain + ?Sized>(config: &QdConfig, domain: &D) -> Result<(Repertoire, RunReport)> {
    run(config, domain, Variation::Novelty)
}

/// Same loop and budget as [`run_qd`], but every offspring is sampled
/// uniformly in the genotype box.
pub fn run_random_baseline<D: Domain + ?Sized>(config: &QdConfig, domain: &D) -> Result<(Repertoire, RunReport)> {
    run(config, domain, Variation::Random)
}

fn evaluate_all<D: Domain + ?Sized>(domain: &D, genotypes: &[Genotype]) -> Vec<Evaluation> {
    genotypes.par_iter().map(|g| domain.evaluate(g)).collect()
}

struct Search<'a, D: Domain + ?Sized> {
    config: &'a QdConfig,
    domain: &'a D,
    rng: ChaCha8Rng,
    repertoire: Repertoire,
    novelty_dims: Vec<usize>,
    /// Previous generation's valid offspring and their novelty.
    population: Vec<(Genotype, f64)>,
}

impl<D: Domain + ?Sized> Search<'_, D> {
    /// Inserts valid results; returns the invalid count and the behaviors of
    /// valid offspring that did not end up in the repertoire.
    fn insert_all(
        &mut self,
        genotypes: Vec<Genotype>,
        evals: Vec<Evaluation>,
    ) -> Result<(usize, Vec<(Genotype, Behavior)>)> {
        let mut invalid = 0;
        let mut outside = Vec::new();
        for (g, e) in genotypes.into_iter().zip(evals) {
            match e {
                Evaluation::Valid { behavior, quality } => {
                    let c = Candidate {
                        genotype: g.clone(),
                        behavior: behavior.clone(),
                        quality,
                    };
                    if self.repertoire.insert(c, self.config.epsilon_q)? == InsertOutcome::Rejected {
                        outside.push((g, behavior));
                    }
                }
                Evaluation::Invalid(_) => invalid += 1,
            }
        }
        Ok((invalid, outside))
    }

    /// Recomputes novelty of every member against members plus `outside`.
    fn refresh_novelty(&mut self, outside: Vec<(Genotype, Behavior)>) -> Result<()> {
        if !self.config.select_from_population {
            let extra: Vec<Behavior> = outside.into_iter().map(|(_, b)| b).collect();
            self.repertoire.refresh_novelty(&extra, &self.novelty_dims)?;
            return Ok(());
        }
        let dims = &self.novelty_dims;
        let norm = self.repertoire.normalizer().select(dims);
        let mut pool: Vec<Vec<f64>> = self
            .repertoire
            .individuals()
            .iter()
            .map(|i| norm.normalize(&i.behavior.select(dims)))
            .collect();
        pool.extend(outside.iter().map(|(_, b)| norm.normalize(&b.select(dims))));
        let h = metrics::silverman_bandwidth(&pool)?;
        let scores = metrics::novelty_scores(&pool, pool.len(), h);
        let members = self.repertoire.len();
        for (ind, s) in self.repertoire.individuals_mut().iter_mut().zip(&scores) {
            ind.novelty = *s;
        }
        self.population = outside
            .into_iter()
            .map(|(g, _)| g)
            .zip(scores[members..].iter().copied())
            .collect();
        Ok(())
    }

    fn parents(&mut self) -> Vec<Genotype> {
        let count = self.config.population_size;
        if !self.config.select_from_population || self.population.is_empty() {
            return select_parents(&self.repertoire, count, &mut self.rng);
        }
        let mut genotypes: Vec<&Genotype> = self.repertoire.individuals().iter().map(|i| &i.genotype).collect();
        let mut novelty: Vec<f64> = self.repertoire.individuals().iter().map(|i| i.novelty).collect();
        genotypes.extend(self.population.iter().map(|(g, _)| g));
        novelty.extend(self.population.iter().map(|(_, n)| *n));
        let drawn = genotypes.len().min(count);
        let idx = sample_weighted(&novelty_weights(&novelty), drawn, &mut self.rng)
            .expect("shifted novelty weights are positive and finite");
        let mut out: Vec<Genotype> = idx.into_iter().map(|i| genotypes[i].clone()).collect();
        let n = self.repertoire.genotype_dim();
        out.extend((drawn..count).map(|_| random_genotype(n, &mut self.rng)));
        out
    }

    fn offspring(&mut self, variation: Variation) -> Result<Vec<Genotype>> {
        let count = self.config.population_size;
        let n = self.repertoire.genotype_dim();
        if variation == Variation::Random {
            return Ok((0..count).map(|_| random_genotype(n, &mut self.rng)).collect());
        }
        let parents = self.parents();
        let cfg = self.config;
        let mut children = Vec::with_capacity(count);
        for pair in parents.chunks(2) {
            let (a, b) = match pair {
                [a, b] => sbx_crossover(a, b, cfg.crossover_rate, cfg.sbx_eta, &mut self.rng)?,
                [a] => (a.clone(), a.clone()),
                _ => unreachable!(),
            };
            children.push(poly_mutation(&a, cfg.mutation_rate, cfg.mutation_eta, &mut self.rng));
            if pair.len() == 2 {
                children.push(poly_mutation(&b, cfg.mutation_rate, cfg.mutation_eta, &mut self.rng));
            }
        }
        Ok(children)
    }
}

fn run<D: Domain + ?Sized>(config: &QdConfig, domain: &D, variation: Variation) -> Result<(Repertoire, RunReport)> {
    config.validate()?;
    let l = config.l_repertoire.unwrap_or_else(|| domain.default_l_repertoire());
    let repertoire = Repertoire::new(
        domain.genotype_dim(),
        domain.behavior_bounds(),
        domain.control_dims(),
        l,
    )?;
    let novelty_dims = match config.novelty_dims {
        NoveltyDims::Full => (0..repertoire.behavior_dim()).collect(),
        NoveltyDims::Control => domain.control_dims(),
    };
    let mut s = Search {
        config,
        domain,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        repertoire,
        novelty_dims,
        population: Vec::new(),
    };
    let mut report = RunReport::default();
    let n = domain.genotype_dim();
    let pop = config.population_size;

    while s.repertoire.is_empty() {
        if report.seeding_generations == config.seeding_cap {
            return Err(Error::Initialization(config.seeding_cap));
        }
        let genotypes: Vec<Genotype> = (0..pop).map(|_| random_genotype(n, &mut s.rng)).collect();
        let evals = evaluate_all(s.domain, &genotypes);
        let (_, outside) = s.insert_all(genotypes, evals)?;
        report.seeding_generations += 1;
        report.seeding_evaluations += pop;
        if variation == Variation::Novelty && !s.repertoire.is_empty() {
            s.refresh_novelty(outside)?;
        }
    }

    let mut evaluations = report.seeding_evaluations;
    for generation in 1..=config.generations {
        let genotypes = s.offspring(variation)?;
        let evals = evaluate_all(s.domain, &genotypes);
        let (invalid, outside) = s.insert_all(genotypes, evals)?;
        evaluations += pop;
        if variation == Variation::Novelty {
            s.refresh_novelty(outside)?;
        }
        report.records.push(GenerationRecord {
            generation,
            archive_size: s.repertoire.len(),
            mean_quality: s.repertoire.mean_quality(),
            evaluations_used: evaluations,
            invalid_count: invalid,
        });
    }
    Ok((s.repertoire, report))
}
