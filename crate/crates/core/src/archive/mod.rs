//! Individuals and the unstructured repertoire.

mod io;
pub mod metrics;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
pub use metrics::{behavior_distance, novelty, silverman_bandwidth, Normalizer};

/// Action parameters in the normalized box `[0, 1]^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genotype(Vec<f64>);

impl Genotype {
    /// Validates that every value is finite and inside `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(contract(format!("genotype value {i} = {v} outside [0, 1]")));
        }
        Ok(Self(values))
    }

    /// Clamps every value into `[0, 1]`; non-finite values become 0.5.
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 };
        }
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn distance_sq(&self, other: &Genotype) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Genotype) -> f64 {
        self.distance_sq(other).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Behavior descriptor in physical units. Which entries form the control
/// subspace is a property of the domain and lives on the [`Repertoire`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Behavior(Vec<f64>);

impl Behavior {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(contract("behavior contains a non-finite value"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries at `dims`, in order.
    pub fn select(&self, dims: &[usize]) -> Vec<f64> {
        dims.iter().map(|&d| self.0[d]).collect()
    }
}

/// A repertoire member.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub genotype: Genotype,
    pub behavior: Behavior,
    pub quality: f64,
    /// Cached novelty score, refreshed once per generation during search.
    pub novelty: f64,
    /// Accumulated reality-gap correction, same length as the behavior.
    pub compensation: Vec<f64>,
}

impl Individual {
    /// Expected behavior after compensation: `behavior + compensation`.
    pub fn compensated(&self) -> Vec<f64> {
        self.behavior
            .values()
            .iter()
            .zip(&self.compensation)
            .map(|(b, c)| b + c)
            .collect()
    }

    pub fn compensated_at(&self, dim: usize) -> f64 {
        self.behavior.values()[dim] + self.compensation[dim]
    }
}

/// A freshly evaluated action waiting for insertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub genotype: Genotype,
    pub behavior: Behavior,
    pub quality: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Added(u64),
    /// The nearest neighbor with id `old` was replaced by the candidate (`new`).
    Replaced {
        old: u64,
        new: u64,
    },
    Rejected,
}

/// Unstructured archive of individuals with nearest-neighbor queries in
/// behavior and genotype space.
#[derive(Debug, Clone, PartialEq)]
pub struct Repertoire {
    individuals: Vec<Individual>,
    genotype_dim: usize,
    l_repertoire: f64,
    behavior_bounds: Vec<(f64, f64)>,
    control_dims: Vec<usize>,
    next_id: u64,
    normalizer: Normalizer,
}

impl Repertoire {
    pub fn new(
        genotype_dim: usize,
        behavior_bounds: Vec<(f64, f64)>,
        control_dims: Vec<usize>,
        l_repertoire: f64,
    ) -> Result<Self> {
        let normalizer = Normalizer::new(&behavior_bounds)?;
        let m = behavior_bounds.len();
        if genotype_dim == 0 || m == 0 {
            return Err(contract("genotype and behavior dimensions must be positive"));
        }
        if control_dims.is_empty() || control_dims.iter().any(|&d| d >= m) {
            return Err(contract(format!(
                "control dims {control_dims:?} must be a non-empty subset of 0..{m}"
            )));
        }
        let mut sorted = control_dims.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != control_dims.len() {
            return Err(contract("control dims contain duplicates"));
        }
        if !(l_repertoire.is_finite() && l_repertoire >= 0.0) {
            return Err(contract("l_repertoire must be a finite non-negative number"));
        }
        Ok(Self {
            individuals: Vec::new(),
            genotype_dim,
            l_repertoire,
            behavior_bounds,
            control_dims,
            next_id: 0,
            normalizer,
        })
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn individuals_mut(&mut self) -> &mut [Individual] {
        &mut self.individuals
    }

    pub fn get(&self, id: u64) -> Option<&Individual> {
        self.individuals.iter().find(|i| i.id == id)
    }

    pub fn genotype_dim(&self) -> usize {
        self.genotype_dim
    }

    pub fn behavior_dim(&self) -> usize {
        self.behavior_bounds.len()
    }

    pub fn l_repertoire(&self) -> f64 {
        self.l_repertoire
    }

    pub fn behavior_bounds(&self) -> &[(f64, f64)] {
        &self.behavior_bounds
    }

    pub fn control_dims(&self) -> &[usize] {
        &self.control_dims
    }

    pub fn next_id(&self) -> u64 {
        self.next_id
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    /// Index of the member whose genotype equals `g` exactly.
    pub fn position_of_genotype(&self, g: &Genotype) -> Option<usize> {
        self.individuals.iter().position(|i| &i.genotype == g)
    }

    fn check_candidate(&self, c: &Candidate) -> Result<()> {
        if c.genotype.len() != self.genotype_dim {
            return Err(contract(format!(
                "genotype length {} != {}",
                c.genotype.len(),
                self.genotype_dim
            )));
        }
        if c.behavior.len() != self.behavior_dim() {
            return Err(contract(format!(
                "behavior length {} != {}",
                c.behavior.len(),
                self.behavior_dim()
            )));
        }
        if !c.quality.is_finite() {
            return Err(contract("candidate quality must be finite"));
        }
        Ok(())
    }

    fn push(&mut self, c: Candidate) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        let m = self.behavior_dim();
        self.individuals.push(Individual {
            id,
            genotype: c.genotype,
            behavior: c.behavior,
            quality: c.quality,
            novelty: 0.0,
            compensation: vec![0.0; m],
        });
        id
    }

    /// Adds an individual unconditionally, bypassing the insertion policy.
    pub fn add_unchecked(&mut self, c: Candidate) -> Result<u64> {
        self.check_candidate(&c)?;
        Ok(self.push(c))
    }

    /// Local-competition insertion.
    ///
    /// The candidate is added when its normalized behavior distance to the
    /// nearest member exceeds `l_repertoire`; otherwise it replaces that
    /// member only if `candidate.quality > nn.quality + epsilon_q`.
    pub fn insert(&mut self, c: Candidate, epsilon_q: f64) -> Result<InsertOutcome> {
        self.check_candidate(&c)?;
        // Only a neighbor within l matters, so l² bounds the scan.
        let mut best: Option<(usize, f64)> = None;
        let mut bound = self.l_repertoire * self.l_repertoire;
        for (i, ind) in self.individuals.iter().enumerate() {
            let d2 = self
                .normalizer
                .distance_sq_bounded(ind.behavior.values(), c.behavior.values(), bound);
            if d2 < bound || (d2 == bound && best.is_none()) {
                best = Some((i, d2));
                bound = d2;
            }
        }
        let Some((idx, _)) = best else {
            return Ok(InsertOutcome::Added(self.push(c)));
        };
        if c.quality > self.individuals[idx].quality + epsilon_q {
            let old = self.individuals[idx].id;
            let new = self.next_id;
            self.next_id += 1;
            let m = self.behavior_dim();
            self.individuals[idx] = Individual {
                id: new,
                genotype: c.genotype,
                behavior: c.behavior,
                quality: c.quality,
                novelty: 0.0,
                compensation: vec![0.0; m],
            };
            return Ok(InsertOutcome::Replaced { old, new });
        }
        Ok(InsertOutcome::Rejected)
    }

    /// The `k` members closest to `target` in normalized (compensated)
    /// behavior space, ascending, ties broken by lower id.
    ///
    /// With `control_only`, `target` holds only the control-dimension values
    /// and distances use those dimensions alone; otherwise `target` is a full
    /// behavior vector.
    pub fn nearest_behavior(&self, target: &[f64], k: usize, control_only: bool) -> Result<Vec<(&Individual, f64)>> {
        if self.individuals.is_empty() {
            return Err(contract("nearest_behavior on an empty repertoire"));
        }
        if k == 0 {
            return Err(contract("nearest_behavior needs k >= 1"));
        }
        let dims: Vec<usize> = if control_only {
            self.control_dims.clone()
        } else {
            (0..self.behavior_dim()).collect()
        };
        if target.len() != dims.len() {
            return Err(contract(format!(
                "target has {} values, expected {}",
                target.len(),
                dims.len()
            )));
        }
        let norm = self.normalizer.select(&dims);
        let mut scored: Vec<(&Individual, f64)> = self
            .individuals
            .iter()
            .map(|ind| {
                let b: Vec<f64> = dims.iter().map(|&d| ind.compensated_at(d)).collect();
                (ind, norm.distance_sq(&b, target).sqrt())
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Up to `k` members nearest to `center` in genotype space, strictly
    /// within `radius`, excluding any member whose genotype equals `center`.
    pub fn neighbors_in_genotype_space(&self, center: &Genotype, k: usize, radius: f64) -> Vec<&Individual> {
        let r2 = radius * radius;
        let mut hits: Vec<(&Individual, f64)> = self
            .individuals
            .iter()
            .filter(|ind| &ind.genotype != center)
            .map(|ind| (ind, ind.genotype.distance_sq(center)))
            .filter(|(_, d2)| *d2 < r2)
            .collect();
        hits.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
        hits.truncate(k);
        hits.into_iter().map(|(i, _)| i).collect()
    }

    /// Recomputes every member's cached novelty against the repertoire plus
    /// `extra` behaviors (e.g. offspring that were not inserted).
    ///
    /// `dims` selects which behavior dimensions enter the density estimate.
    pub fn refresh_novelty(&mut self, extra: &[Behavior], dims: &[usize]) -> Result<f64> {
        if self.individuals.is_empty() {
            return Ok(metrics::MIN_BANDWIDTH);
        }
        let norm = self.normalizer.select(dims);
        let mut pool: Vec<Vec<f64>> = Vec::with_capacity(self.len() + extra.len());
        for ind in &self.individuals {
            pool.push(norm.normalize(&ind.behavior.select(dims)));
        }
        for b in extra {
            pool.push(norm.normalize(&b.select(dims)));
        }
        let h = silverman_bandwidth(&pool)?;
        let scores = metrics::novelty_scores(&pool, self.individuals.len(), h);
        for (ind, s) in self.individuals.iter_mut().zip(scores) {
            ind.novelty = s;
        }
        Ok(h)
    }

    pub fn mean_quality(&self) -> f64 {
        if self.individuals.is_empty() {
            return 0.0;
        }
        self.individuals.iter().map(|i| i.quality).sum::<f64>() / self.len() as f64
    }

    pub(crate) fn from_parts(
        genotype_dim: usize,
        behavior_bounds: Vec<(f64, f64)>,
        control_dims: Vec<usize>,
        l_repertoire: f64,
        next_id: u64,
        individuals: Vec<Individual>,
    ) -> Result<Self> {
        let mut r = Self::new(genotype_dim, behavior_bounds, control_dims, l_repertoire)?;
        let mut ids: Vec<u64> = individuals.iter().map(|i| i.id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != individuals.len() {
            return Err(contract("duplicate individual ids"));
        }
        if ids.last().is_some_and(|&max| max >= next_id) {
            return Err(contract("next_id must exceed every individual id"));
        }
        r.individuals = individuals;
        r.next_id = next_id;
        Ok(r)
    }
}
