//! The four desk-scale studies: QD against random search, goal reaching,
//! gap crossing and repertoire updates.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapt::{
    confidence_at, cross_gap, reach, update_repertoire, AdaptStatus, AdaptTrace, JacobianConfig, UpdateConfig,
};
use crate::archive::{Behavior, Genotype, Repertoire};
use crate::error::{contract, Result};
use crate::evolve::{run_qd, run_random_baseline, QdConfig};
use crate::sim::{Domain, Evaluation};

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Median of finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub qd_size: usize,
    pub random_size: usize,
    pub qd_mean_quality: f64,
    pub random_mean_quality: f64,
    /// Random populations the QD run drew before its first valid action.
    pub qd_seeding_generations: usize,
}

/// Runs QD and the random baseline at the same budget for every seed.
pub fn qd_vs_random<D: Domain + ?Sized>(cfg: &QdConfig, domain: &D, seeds: &[u64]) -> Result<Vec<ComparisonRow>> {
    seeds
        .iter()
        .map(|&seed| {
            let c = QdConfig { seed, ..cfg.clone() };
            let (qd, report) = run_qd(&c, domain)?;
            let (rnd, _) = run_random_baseline(&c, domain)?;
            Ok(ComparisonRow {
                seed,
                qd_size: qd.len(),
                random_size: rnd.len(),
                qd_mean_quality: qd.mean_quality(),
                random_mean_quality: rnd.mean_quality(),
                qd_seeding_generations: report.seeding_generations,
            })
        })
        .collect()
}

/// Median QD archive size over the median random archive size.
pub fn median_size_ratio(rows: &[ComparisonRow]) -> f64 {
    let qd: Vec<f64> = rows.iter().map(|r| r.qd_size as f64).collect();
    let rnd: Vec<f64> = rows.iter().map(|r| r.random_size as f64).collect();
    match (median(&qd), median(&rnd)) {
        (Some(q), Some(r)) if r > 0.0 => q / r,
        (Some(q), Some(_)) if q > 0.0 => f64::INFINITY,
        _ => f64::NAN,
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> Result<String> {
    csv_string(rows)
}

/// Draws `count` control-space goals uniformly in the bounding box of the
/// repertoire's compensated control behaviors, rejecting any goal whose
/// normalized control distance to every member exceeds `3·l`.
pub fn sample_targets(repertoire: &Repertoire, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if repertoire.is_empty() {
        return Err(contract("cannot sample targets from an empty repertoire"));
    }
    let dims = repertoire.control_dims().to_vec();
    let norm = repertoire.normalizer().select(&dims);
    let points: Vec<Vec<f64>> = repertoire
        .individuals()
        .iter()
        .map(|i| dims.iter().map(|&d| i.compensated_at(d)).collect())
        .collect();
    let normalized: Vec<Vec<f64>> = points.iter().map(|p| norm.normalize(p)).collect();
    let mut lo = vec![f64::INFINITY; dims.len()];
    let mut hi = vec![f64::NEG_INFINITY; dims.len()];
    for p in &points {
        for k in 0..dims.len() {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let reach = 3.0 * repertoire.l_repertoire();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_draws = count.saturating_mul(10_000).max(10_000);
    for _ in 0..max_draws {
        if out.len() == count {
            break;
        }
        let t: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| if b > a { rng.random_range(a..=b) } else { a })
            .collect();
        let tn = norm.normalize(&t);
        if normalized.iter().any(|p| distance(p, &tn) <= reach) {
            out.push(t);
        }
    }
    if out.len() < count {
        return Err(crate::Error::Config(format!(
            "only {} of {count} targets fell within 3·l of the repertoire",
            out.len()
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachRow {
    pub target: usize,
    pub target_x: f64,
    pub target_y: f64,
    /// Control-space distance from the nearest repertoire action to the goal.
    pub before_error: f64,
    /// Distance after adaptation (last valid iterate).
    pub after_error: f64,
    pub iterations: usize,
    pub status: AdaptStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachStudy {
    pub rows: Vec<ReachRow>,
    pub traces: Vec<AdaptTrace>,
}

impl ReachStudy {
    /// Fraction of goals whose final error is at most `tolerance`.
    pub fn success_rate(&self, tolerance: f64) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.after_error <= tolerance).count() as f64 / self.rows.len() as f64
    }

    pub fn median_before(&self) -> Option<f64> {
        median(&self.rows.iter().map(|r| r.before_error).collect::<Vec<_>>())
    }

    pub fn median_after(&self) -> Option<f64> {
        median(&self.rows.iter().map(|r| r.after_error).collect::<Vec<_>>())
    }

    pub fn summary_csv(&self) -> Result<String> {
        csv_string(&self.rows)
    }
}

/// Runs [`reach`] for every goal. Goals are independent and run in parallel;
/// results keep the input order.
pub fn reach_study<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    targets: &[Vec<f64>],
    domain: &D,
    cfg: &JacobianConfig,
) -> Result<ReachStudy> {
    let results: Vec<Result<AdaptTrace>> = targets
        .par_iter()
        .map(|t| reach(repertoire, t, domain, cfg).map(|(_, trace)| trace))
        .collect();
    let mut rows = Vec::with_capacity(targets.len());
    let mut traces = Vec::with_capacity(targets.len());
    for (i, (t, r)) in targets.iter().zip(results).enumerate() {
        let trace = r?;
        rows.push(ReachRow {
            target: i,
            target_x: t[0],
            target_y: t.get(1).copied().unwrap_or(f64::NAN),
            before_error: trace.initial_error().unwrap_or(f64::NAN),
            after_error: trace.final_error().unwrap_or(f64::NAN),
            iterations: trace.iterations(),
            status: trace.status,
        });
        traces.push(trace);
    }
    Ok(ReachStudy { rows, traces })
}

/// Outcome class of one gap-crossing attempt.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Crossing {
    /// The action itself is invalid under the gap, so there is no error to
    /// reduce.
    InvalidBefore(String),
    NoAdaptationNeeded,
    Converged(usize),
    ApproachedNotConverged,
    Failed(String),
}

impl Crossing {
    pub fn label(&self) -> String {
        match self {
            Crossing::InvalidBefore(why) => format!("invalid_before_{why}"),
            Crossing::NoAdaptationNeeded => "no_adaptation_needed".into(),
            Crossing::Converged(k) => format!("converged_{k}"),
            Crossing::ApproachedNotConverged => "approached_not_converged".into(),
            Crossing::Failed(why) => format!("failed_{why}"),
        }
    }

    fn classify(trace: &AdaptTrace) -> Self {
        let Some(before) = trace.initial_error() else {
            let why = trace.failure.map_or("invalid_action".to_string(), |f| f.to_string());
            return Crossing::InvalidBefore(why);
        };
        if before <= trace.tolerance {
            return Crossing::NoAdaptationNeeded;
        }
        match trace.status {
            AdaptStatus::Converged => Crossing::Converged(trace.iterations()),
            _ => {
                let after = trace.final_error().unwrap_or(before);
                if trace.status == AdaptStatus::MaxIterations && after < before {
                    Crossing::ApproachedNotConverged
                } else if trace.status == AdaptStatus::InvalidAction {
                    Crossing::Failed(trace.failure.map_or("invalid_action".into(), |f| f.to_string()))
                } else if trace.status == AdaptStatus::MaxIterations {
                    Crossing::Failed("diverged".into())
                } else {
                    Crossing::Failed(trace.status.to_string())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub action: usize,
    pub id: u64,
    pub before_error: Option<f64>,
    pub after_error: Option<f64>,
    pub iterations: usize,
    pub status: AdaptStatus,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapStudy {
    pub rows: Vec<CrossingRow>,
    pub categories: Vec<Crossing>,
    pub traces: Vec<AdaptTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub category: String,
    pub count: usize,
}

impl GapStudy {
    /// Category counts in a fixed order: actions invalid under the gap, no
    /// adaptation, converged by iteration count, approached, then failures
    /// by reason.
    pub fn histogram(&self, max_iterations: usize) -> Vec<HistogramRow> {
        let mut counts: BTreeMap<Crossing, usize> = BTreeMap::new();
        counts.insert(Crossing::NoAdaptationNeeded, 0);
        for k in 1..=max_iterations {
            counts.insert(Crossing::Converged(k), 0);
        }
        counts.insert(Crossing::ApproachedNotConverged, 0);
        for c in &self.categories {
            *counts.entry(c.clone()).or_insert(0) += 1;
        }
        counts
            .into_iter()
            .map(|(c, count)| HistogramRow {
                category: c.label(),
                count,
            })
            .collect()
    }

    /// Among valid actions that initially missed the tolerance, the fraction
    /// that converged within `k` iterations.
    pub fn converged_within(&self, k: usize) -> f64 {
        let failing: Vec<&Crossing> = self
            .categories
            .iter()
            .filter(|c| !matches!(c, Crossing::NoAdaptationNeeded | Crossing::InvalidBefore(_)))
            .collect();
        if failing.is_empty() {
            return 1.0;
        }
        let ok = failing
            .iter()
            .filter(|c| matches!(c, Crossing::Converged(i) if *i <= k))
            .count();
        ok as f64 / failing.len() as f64
    }

    pub fn rows_csv(&self) -> Result<String> {
        csv_string(&self.rows)
    }

    pub fn histogram_csv(&self, max_iterations: usize) -> Result<String> {
        csv_string(&self.histogram(max_iterations))
    }
}

/// Samples `count` distinct members and tries to make each produce its
/// expected control behavior on `real`.
pub fn gap_crossing<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    real: &D,
    count: usize,
    seed: u64,
    cfg: &JacobianConfig,
) -> Result<GapStudy> {
    let n = repertoire.len();
    if count > n {
        return Err(crate::Error::Config(format!("cannot sample {count} actions from {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, n, count).into_vec();
    let dims = repertoire.control_dims().to_vec();
    let results: Vec<Result<AdaptTrace>> = picks
        .par_iter()
        .map(|&i| {
            let ind = &repertoire.individuals()[i];
            let target: Vec<f64> = dims.iter().map(|&d| ind.compensated_at(d)).collect();
            cross_gap(repertoire, &ind.genotype, &target, real, cfg).map(|(_, t)| t)
        })
        .collect();
    let mut study = GapStudy {
        rows: Vec::with_capacity(count),
        categories: Vec::with_capacity(count),
        traces: Vec::with_capacity(count),
    };
    for (&i, r) in picks.iter().zip(results) {
        let trace = r?;
        let category = Crossing::classify(&trace);
        study.rows.push(CrossingRow {
            action: i,
            id: repertoire.individuals()[i].id,
            before_error: trace.initial_error(),
            after_error: trace.final_error(),
            iterations: trace.iterations(),
            status: trace.status,
            category: category.label(),
        });
        study.categories.push(category);
        study.traces.push(trace);
    }
    Ok(study)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateCurveRow {
    pub trial: usize,
    pub full_mean_error: f64,
    pub full_failing_ratio: f64,
    pub action_only_mean_error: f64,
    pub action_only_failing_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStudy {
    /// Row `t` holds the measurement after `t` trials; row 0 is the start.
    pub curves: Vec<UpdateCurveRow>,
    /// Members whose genotype is valid on the real evaluator; the curves
    /// average over these.
    pub measured: usize,
    /// Tested actions whose adaptation converged.
    pub adapted: usize,
}

impl UpdateStudy {
    pub fn csv(&self) -> Result<String> {
        csv_string(&self.curves)
    }
}

struct Measure {
    mean: f64,
    failing: f64,
}

fn measure(rep: &Repertoire, real: &[(usize, Behavior)], dims: &[usize], tolerance: f64) -> Measure {
    let mut sum = 0.0;
    let mut failing = 0;
    for (i, b) in real {
        let ind = &rep.individuals()[*i];
        let e = dims
            .iter()
            .map(|&d| (b.values()[d] - ind.compensated_at(d)).powi(2))
            .sum::<f64>()
            .sqrt();
        sum += e;
        if e > tolerance {
            failing += 1;
        }
    }
    let n = real.len().max(1) as f64;
    Measure {
        mean: sum / n,
        failing: failing as f64 / n,
    }
}

/// Sequential trials on `real`: each tested action is adapted when it
/// misses its expectation, and its observation is folded into the
/// repertoire. Two copies of the repertoire see the same trial sequence,
/// one propagating every observation through the kernel and one updating
/// only the tested action. After every trial, every original member is
/// re-measured against its real behavior.
pub fn repertoire_update<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    real: &D,
    trials: usize,
    seed: u64,
    jacobian: &JacobianConfig,
    update: &UpdateConfig,
) -> Result<UpdateStudy> {
    let dims = repertoire.control_dims().to_vec();
    let tolerance = jacobian.tolerance.unwrap_or_else(|| real.success_tolerance());
    let observed: Vec<Option<(Behavior, f64)>> = repertoire
        .individuals()
        .par_iter()
        .map(|ind| match real.evaluate(&ind.genotype) {
            Evaluation::Valid { behavior, quality } => Some((behavior, quality)),
            Evaluation::Invalid(_) => None,
        })
        .collect();
    let valid: Vec<(usize, Behavior)> = observed
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.as_ref().map(|(b, _)| (i, b.clone())))
        .collect();
    if trials > valid.len() {
        return Err(crate::Error::Config(format!(
            "{trials} trials requested but only {} actions are valid on the real evaluator",
            valid.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = sample(&mut rng, valid.len(), trials)
        .into_iter()
        .map(|k| valid[k].0)
        .collect();

    let mut full = repertoire.clone();
    let mut single = repertoire.clone();
    let action_only = UpdateConfig {
        action_only: true,
        ..update.clone()
    };
    let start = measure(&full, &valid, &dims, tolerance);
    let mut curves = vec![UpdateCurveRow {
        trial: 0,
        full_mean_error: start.mean,
        full_failing_ratio: start.failing,
        action_only_mean_error: start.mean,
        action_only_failing_ratio: start.failing,
    }];
    let mut adapted = 0;
    for (t, &i) in order.iter().enumerate() {
        let (b_a, q_a) = observed[i].clone().expect("trials are drawn from valid actions");
        let g: Genotype = repertoire.individuals()[i].genotype.clone();
        let expected: Vec<f64> = dims.iter().map(|&d| full.individuals()[i].compensated_at(d)).collect();
        if distance(&b_a.select(&dims), &expected) > tolerance {
            let (_, trace) = cross_gap(&full, &g, &expected, real, jacobian)?;
            if trace.status == AdaptStatus::Converged {
                adapted += 1;
            }
        }
        for (rep, cfg) in [(&mut full, update), (&mut single, &action_only)] {
            let lambda = confidence_at(rep, &g, jacobian)?;
            update_repertoire(rep, &g, &b_a, q_a, lambda, None, cfg)?;
        }
        let f = measure(&full, &valid, &dims, tolerance);
        let s = measure(&single, &valid, &dims, tolerance);
        curves.push(UpdateCurveRow {
            trial: t + 1,
            full_mean_error: f.mean,
            full_failing_ratio: f.failing,
            action_only_mean_error: s.mean,
            action_only_failing_ratio: s.failing,
        });
    }
    Ok(UpdateStudy {
        curves,
        measured: valid.len(),
        adapted,
    })
}
