//! Local linearization around repertoire actions: reaching goals that are
//! not in the repertoire, crossing a reality gap for one action, and
//! propagating observed gaps to neighboring actions.

mod jacobian;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use jacobian::{
    confidence, estimate_jacobian, fit_jacobian, pseudo_inverse, step, JacobianConfig, JacobianEstimate,
};

use crate::archive::{Behavior, Candidate, Genotype, Repertoire};
use crate::error::{contract, Result};
use crate::sim::{Domain, Evaluation, FailureReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptStatus {
    Converged,
    MaxIterations,
    NoNeighbors,
    InvalidAction,
    ZeroConfidence,
}

impl fmt::Display for AdaptStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptStatus::Converged => "converged",
            AdaptStatus::MaxIterations => "max_iterations",
            AdaptStatus::NoNeighbors => "no_neighbors",
            AdaptStatus::InvalidAction => "invalid_action",
            AdaptStatus::ZeroConfidence => "zero_confidence",
        })
    }
}

/// One iterate of a descent. `observed` and `error` are absent when the
/// genotype decoded to an invalid action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptStep {
    pub genotype: Vec<f64>,
    pub observed: Option<Vec<f64>>,
    pub error: Option<f64>,
    /// Confidence of the Jacobian that produced this iterate.
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptTrace {
    pub target: Vec<f64>,
    pub tolerance: f64,
    pub steps: Vec<AdaptStep>,
    pub status: AdaptStatus,
    pub failure: Option<FailureReason>,
}

impl AdaptTrace {
    /// Number of adapted actions tried after the starting one.
    pub fn iterations(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn initial_error(&self) -> Option<f64> {
        self.steps.first().and_then(|s| s.error)
    }

    /// Error of the last valid iterate.
    pub fn final_error(&self) -> Option<f64> {
        self.steps.iter().rev().find_map(|s| s.error)
    }

    /// Smallest error reached at or before iteration `k`.
    pub fn best_error_within(&self, k: usize) -> Option<f64> {
        self.steps
            .iter()
            .take(k + 1)
            .filter_map(|s| s.error)
            .min_by(f64::total_cmp)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })
    }

    /// Flat rows: `iteration,error,confidence,observed...,genotype...`.
    pub fn to_csv(&self) -> String {
        let c = self.target.len();
        let n = self.steps.first().map_or(0, |s| s.genotype.len());
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        let mut header = vec!["iteration".to_string(), "error".into(), "confidence".into()];
        header.extend((0..c).map(|i| format!("observed_{i}")));
        header.extend((0..n).map(|i| format!("genotype_{i}")));
        out.write_record(&header).expect("writing to memory");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for (i, s) in self.steps.iter().enumerate() {
            let mut row = vec![i.to_string(), opt(s.error), opt(s.confidence)];
            match &s.observed {
                Some(o) => row.extend(o.iter().map(f64::to_string)),
                None => row.extend(std::iter::repeat_n(String::new(), c)),
            }
            row.extend(s.genotype.iter().map(f64::to_string));
            out.write_record(&row).expect("writing to memory");
        }
        String::from_utf8(out.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

fn control_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn observe<D: Domain + ?Sized>(
    domain: &D,
    g: &Genotype,
    dims: &[usize],
) -> std::result::Result<Vec<f64>, FailureReason> {
    match domain.evaluate(g) {
        Evaluation::Valid { behavior, .. } => Ok(behavior.select(dims)),
        Evaluation::Invalid(r) => Err(r),
    }
}

/// Shared descent behind [`reach`] and [`cross_gap`].
///
/// `offset` is the estimated gap between what the evaluator returns and what
/// the repertoire predicts; it is removed from observations before they
/// anchor a Jacobian so that anchors and neighbor behaviors live in the same
/// frame.
#[allow(clippy::too_many_arguments)]
fn descend<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    start: Genotype,
    start_obs: Vec<f64>,
    offset: &[f64],
    target: &[f64],
    domain: &D,
    cfg: &JacobianConfig,
    tolerance: f64,
) -> Result<(Genotype, AdaptTrace)> {
    let dims = repertoire.control_dims().to_vec();
    let norm = repertoire.normalizer();
    let mut trace = AdaptTrace {
        target: target.to_vec(),
        tolerance,
        steps: Vec::new(),
        status: AdaptStatus::MaxIterations,
        failure: None,
    };
    let mut g = start;
    let mut obs = start_obs;
    let mut err = control_error(&obs, target);
    trace.steps.push(AdaptStep {
        genotype: g.values().to_vec(),
        observed: Some(obs.clone()),
        error: Some(err),
        confidence: None,
    });
    if err <= tolerance {
        trace.status = AdaptStatus::Converged;
        return Ok((g, trace));
    }
    for _ in 0..cfg.max_iterations {
        let anchor: Vec<f64> = dims
            .iter()
            .zip(&obs)
            .zip(offset)
            .map(|((&d, o), off)| norm.normalize_dim(d, o - off))
            .collect();
        let mut est = estimate_jacobian(repertoire, &g, &anchor, cfg.epsilon, cfg)?;
        if est.is_none() && cfg.widen_once {
            est = estimate_jacobian(repertoire, &g, &anchor, 2.0 * cfg.epsilon, cfg)?;
        }
        let Some(est) = est else {
            trace.status = AdaptStatus::NoNeighbors;
            return Ok((g, trace));
        };
        if est.confidence <= 0.0 {
            trace.status = AdaptStatus::ZeroConfidence;
            return Ok((g, trace));
        }
        let delta: Vec<f64> = dims
            .iter()
            .zip(target.iter().zip(&obs))
            .map(|(&d, (t, o))| norm.normalize_dim(d, *t) - norm.normalize_dim(d, *o))
            .collect();
        let dg = step(&est.matrix, &delta, cfg.svd_cutoff);
        let next = Genotype::clamped(
            g.values()
                .iter()
                .zip(&dg)
                .map(|(x, d)| x + est.confidence * d)
                .collect(),
        );
        match observe(domain, &next, &dims) {
            Ok(o) => {
                err = control_error(&o, target);
                trace.steps.push(AdaptStep {
                    genotype: next.values().to_vec(),
                    observed: Some(o.clone()),
                    error: Some(err),
                    confidence: Some(est.confidence),
                });
                g = next;
                obs = o;
                if err <= tolerance {
                    trace.status = AdaptStatus::Converged;
                    return Ok((g, trace));
                }
            }
            Err(reason) => {
                trace.steps.push(AdaptStep {
                    genotype: next.values().to_vec(),
                    observed: None,
                    error: None,
                    confidence: Some(est.confidence),
                });
                trace.status = AdaptStatus::InvalidAction;
                trace.failure = Some(reason);
                return Ok((g, trace));
            }
        }
    }
    Ok((g, trace))
}

fn tolerance_for<D: Domain + ?Sized>(cfg: &JacobianConfig, domain: &D) -> f64 {
    cfg.tolerance.unwrap_or_else(|| domain.success_tolerance())
}

/// Moves from the repertoire action nearest to `target` (in compensated
/// control space) toward `target` by Jacobian-pseudo-inverse steps, each
/// evaluated on `domain`. Diversity dimensions are ignored.
pub fn reach<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    target: &[f64],
    domain: &D,
    cfg: &JacobianConfig,
) -> Result<(Genotype, AdaptTrace)> {
    cfg.validate()?;
    let nearest = repertoire.nearest_behavior(target, 1, true)?;
    let start = nearest[0].0;
    let obs: Vec<f64> = repertoire
        .control_dims()
        .iter()
        .map(|&d| start.compensated_at(d))
        .collect();
    let offset = vec![0.0; obs.len()];
    descend(
        repertoire,
        start.genotype.clone(),
        obs,
        &offset,
        target,
        domain,
        cfg,
        tolerance_for(cfg, domain),
    )
}

/// Adapts action `g_a` so that, on the gap-injected `real` evaluator, it
/// produces `target`. Jacobians still come from the repertoire.
pub fn cross_gap<D: Domain + ?Sized>(
    repertoire: &Repertoire,
    g_a: &Genotype,
    target: &[f64],
    real: &D,
    cfg: &JacobianConfig,
) -> Result<(Genotype, AdaptTrace)> {
    cfg.validate()?;
    let dims = repertoire.control_dims().to_vec();
    if target.len() != dims.len() {
        return Err(contract(format!(
            "target has {} values, expected {}",
            target.len(),
            dims.len()
        )));
    }
    let tolerance = tolerance_for(cfg, real);
    let obs = match observe(real, g_a, &dims) {
        Ok(o) => o,
        Err(reason) => {
            let trace = AdaptTrace {
                target: target.to_vec(),
                tolerance,
                steps: vec![AdaptStep {
                    genotype: g_a.values().to_vec(),
                    observed: None,
                    error: None,
                    confidence: None,
                }],
                status: AdaptStatus::InvalidAction,
                failure: Some(reason),
            };
            return Ok((g_a.clone(), trace));
        }
    };
    let expected: Vec<f64> = match repertoire.position_of_genotype(g_a) {
        Some(i) => {
            let ind = &repertoire.individuals()[i];
            dims.iter().map(|&d| ind.compensated_at(d)).collect()
        }
        None => target.to_vec(),
    };
    let offset: Vec<f64> = obs.iter().zip(&expected).map(|(o, e)| o - e).collect();
    descend(repertoire, g_a.clone(), obs, &offset, target, real, cfg, tolerance)
}

/// How an observed trial moves the compensation of other actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// `η_i += w_i·(b_a − b̃_a)`: every action inherits the tested action's
    /// observed gap, weighted by genotype proximity.
    #[default]
    GapPropagation,
    /// `η_i += w_i·(b_a − b̃_i)`: expectations are pulled toward the observation.
    TowardObservation,
    /// `η_i += w_i·(b̃_i − b_a)`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpdateConfig {
    pub rule: UpdateRule,
    /// Factor `s` on genotype distances inside the kernel, i.e. the kernel
    /// matrix is `λ·s²·I`.
    pub kernel_scale: f64,
    /// Update only the tested action.
    pub action_only: bool,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            rule: UpdateRule::default(),
            kernel_scale: 3.0,
            action_only: false,
        }
    }
}

/// Folds one observed trial into the repertoire's compensation terms.
///
/// `observed` is the full behavior seen on the real evaluator. A trial whose
/// genotype is not yet a member is inserted first with that behavior; its
/// gap is then measured against `expected` (control dims), and without an
/// expectation nothing else changes. Weights are
/// `w_i = exp(−0.5·λ·s²·‖g_i − g_a‖²)`. `λ = 0` is a no-op. Returns the
/// number of members whose compensation changed.
pub fn update_repertoire(
    repertoire: &mut Repertoire,
    g_a: &Genotype,
    observed: &Behavior,
    quality: f64,
    lambda: f64,
    expected: Option<&[f64]>,
    cfg: &UpdateConfig,
) -> Result<usize> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(contract(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if !(cfg.kernel_scale.is_finite() && cfg.kernel_scale >= 0.0) {
        return Err(contract("kernel_scale must be finite and non-negative"));
    }
    if observed.len() != repertoire.behavior_dim() {
        return Err(contract("observed behavior has the wrong length"));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let dims = repertoire.control_dims().to_vec();
    let b_a = observed.select(&dims);
    let (a_idx, gap, fresh) = match repertoire.position_of_genotype(g_a) {
        Some(i) => {
            let ind = &repertoire.individuals()[i];
            let gap: Vec<f64> = dims.iter().zip(&b_a).map(|(&d, b)| b - ind.compensated_at(d)).collect();
            (i, Some(gap), false)
        }
        None => {
            repertoire.add_unchecked(Candidate {
                genotype: g_a.clone(),
                behavior: observed.clone(),
                quality,
            })?;
            let gap = match expected {
                Some(e) if e.len() == dims.len() => Some(b_a.iter().zip(e).map(|(b, x)| b - x).collect()),
                Some(_) => return Err(contract("expected behavior has the wrong length")),
                None => None,
            };
            (repertoire.len() - 1, gap, true)
        }
    };
    let s2 = cfg.kernel_scale * cfg.kernel_scale;
    let mut changed = 0;
    for (i, ind) in repertoire.individuals_mut().iter_mut().enumerate() {
        if cfg.action_only && i != a_idx {
            continue;
        }
        // A freshly inserted trial already expects exactly what was observed.
        if i == a_idx && fresh {
            continue;
        }
        let w = (-0.5 * lambda * s2 * ind.genotype.distance_sq(g_a)).exp();
        let mut any = false;
        for (j, &d) in dims.iter().enumerate() {
            let delta = match cfg.rule {
                UpdateRule::GapPropagation => match &gap {
                    Some(gap) => w * gap[j],
                    None => 0.0,
                },
                UpdateRule::TowardObservation => w * (b_a[j] - ind.compensated_at(d)),
                UpdateRule::Literal => w * (ind.compensated_at(d) - b_a[j]),
            };
            if delta != 0.0 {
                ind.compensation[d] += delta;
                any = true;
            }
        }
        if any {
            changed += 1;
        }
    }
    Ok(changed)
}

/// Confidence of the Jacobian at a repertoire action, or 0 when it cannot
/// be estimated.
pub fn confidence_at(repertoire: &Repertoire, g: &Genotype, cfg: &JacobianConfig) -> Result<f64> {
    let dims = repertoire.control_dims().to_vec();
    let norm = repertoire.normalizer();
    let anchor: Vec<f64> = match repertoire.position_of_genotype(g) {
        Some(i) => {
            let ind = &repertoire.individuals()[i];
            dims.iter()
                .map(|&d| norm.normalize_dim(d, ind.compensated_at(d)))
                .collect()
        }
        None => return Ok(0.0),
    };
    let mut est = estimate_jacobian(repertoire, g, &anchor, cfg.epsilon, cfg)?;
    if est.is_none() && cfg.widen_once {
        est = estimate_jacobian(repertoire, g, &anchor, 2.0 * cfg.epsilon, cfg)?;
    }
    Ok(est.map_or(0.0, |e| e.confidence))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::archive::Behavior;
    use crate::sim::Evaluation;

    const A: [[f64; 3]; 2] = [[1.0, -0.5, 0.3], [0.2, 0.8, -0.4]];

    /// Control behavior `A·g + offset`, one diversity dim; invalid past `wall`.
    struct Linear {
        offset: [f64; 2],
        wall: f64,
    }

    impl Linear {
        fn exact() -> Self {
            Self {
                offset: [0.0; 2],
                wall: 1.1,
            }
        }
        fn control(&self, g: &[f64]) -> [f64; 2] {
            let mut out = self.offset;
            for (r, row) in A.iter().enumerate() {
                out[r] += row.iter().zip(g).map(|(a, x)| a * x).sum::<f64>();
            }
            out
        }
    }

    impl Domain for Linear {
        fn name(&self) -> &str {
            "linear"
        }
        fn genotype_dim(&self) -> usize {
            3
        }
        fn behavior_bounds(&self) -> Vec<(f64, f64)> {
            vec![(-2.0, 2.0), (-2.0, 2.0), (0.0, 1.0)]
        }
        fn control_dims(&self) -> Vec<usize> {
            vec![0, 1]
        }
        fn default_l_repertoire(&self) -> f64 {
            0.0
        }
        fn success_tolerance(&self) -> f64 {
            1e-6
        }
        fn config_hash(&self) -> String {
            "linear".into()
        }
        fn evaluate(&self, g: &Genotype) -> Evaluation {
            let v = g.values();
            if v[0] > self.wall {
                return Evaluation::Invalid(FailureReason::JointLimit);
            }
            let c = self.control(v);
            Evaluation::Valid {
                behavior: Behavior::new(vec![c[0], c[1], v[2]]).unwrap(),
                quality: 0.0,
            }
        }
    }

    fn repertoire(count: usize, lo: f64, hi: f64) -> Repertoire {
        let d = Linear::exact();
        let mut rep = Repertoire::new(3, d.behavior_bounds(), d.control_dims(), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..count {
            let g = Genotype::new((0..3).map(|_| rng.random_range(lo..hi)).collect()).unwrap();
            let Evaluation::Valid { behavior, quality } = d.evaluate(&g) else {
                unreachable!()
            };
            rep.add_unchecked(Candidate {
                genotype: g,
                behavior,
                quality,
            })
            .unwrap();
        }
        rep
    }

    #[test]
    fn reach_converges_in_one_step_on_a_linear_map() {
        let rep = repertoire(300, 0.2, 0.8);
        let d = Linear::exact();
        let target = d.control(&[0.45, 0.52, 0.61]);
        let (g, trace) = reach(&rep, &target, &d, &JacobianConfig::for_reach()).unwrap();
        assert_eq!(trace.status, AdaptStatus::Converged);
        assert_eq!(trace.iterations(), 1);
        assert!((trace.steps[1].confidence.unwrap() - 1.0).abs() < 1e-9);
        assert!(control_error(&d.control(g.values()), &target) < 1e-9);
    }

    #[test]
    fn reach_without_neighbors_stops_at_the_start() {
        let rep = repertoire(3, 0.2, 0.8);
        let d = Linear::exact();
        let (_, trace) = reach(&rep, &[0.9, 0.9], &d, &JacobianConfig::for_reach()).unwrap();
        assert_eq!(trace.status, AdaptStatus::NoNeighbors);
        assert_eq!(trace.iterations(), 0);
        assert!(trace.initial_error().unwrap() > 0.0);
    }

    #[test]
    fn reach_into_an_invalid_region_reports_the_reason() {
        let rep = repertoire(300, 0.2, 0.8);
        let d = Linear {
            wall: 0.85,
            ..Linear::exact()
        };
        let target = d.control(&[0.95, 0.5, 0.5]);
        let (g, trace) = reach(&rep, &target, &d, &JacobianConfig::for_reach()).unwrap();
        assert_eq!(trace.status, AdaptStatus::InvalidAction);
        assert_eq!(trace.failure, Some(FailureReason::JointLimit));
        assert!(trace.steps.last().unwrap().error.is_none());
        // The returned action is the last valid one.
        assert_eq!(g.values(), trace.steps[trace.steps.len() - 2].genotype.as_slice());
    }

    #[test]
    fn cross_gap_removes_a_constant_offset() {
        let rep = repertoire(300, 0.2, 0.8);
        let real = Linear {
            offset: [0.05, -0.03],
            wall: 1.1,
        };
        let member = &rep.individuals()[17];
        let target = member.behavior.select(&[0, 1]);
        let (g, trace) = cross_gap(&rep, &member.genotype, &target, &real, &JacobianConfig::default()).unwrap();
        assert_eq!(trace.status, AdaptStatus::Converged);
        assert_eq!(trace.iterations(), 1);
        assert!((trace.initial_error().unwrap() - (0.05f64.powi(2) + 0.03f64.powi(2)).sqrt()).abs() < 1e-12);
        assert!(control_error(&real.control(g.values()), &target) < 1e-9);
    }

    #[test]
    fn trace_round_trips_through_json() {
        let rep = repertoire(300, 0.2, 0.8);
        let d = Linear::exact();
        let (_, trace) = reach(&rep, &d.control(&[0.4, 0.4, 0.4]), &d, &JacobianConfig::for_reach()).unwrap();
        assert_eq!(AdaptTrace::from_json(&trace.to_json()).unwrap(), trace);
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), trace.steps.len() + 1);
        assert!(csv.starts_with("iteration,error,confidence,observed_0,observed_1,genotype_0"));
    }

    fn observed(rep: &Repertoire, i: usize, shift: [f64; 2]) -> Behavior {
        let b = rep.individuals()[i].behavior.values();
        Behavior::new(vec![b[0] + shift[0], b[1] + shift[1], b[2]]).unwrap()
    }

    #[test]
    fn zero_confidence_update_changes_nothing() {
        let mut rep = repertoire(50, 0.2, 0.8);
        let before = rep.clone();
        let g = rep.individuals()[3].genotype.clone();
        let obs = observed(&rep, 3, [0.1, 0.1]);
        let n = update_repertoire(&mut rep, &g, &obs, 0.0, 0.0, None, &UpdateConfig::default()).unwrap();
        assert_eq!(n, 0);
        assert_eq!(rep, before);
        let fresh = Genotype::new(vec![0.1; 3]).unwrap();
        update_repertoire(&mut rep, &fresh, &obs, 0.0, 0.0, None, &UpdateConfig::default()).unwrap();
        assert_eq!(rep, before);
    }

    #[test]
    fn tested_action_expects_its_observation_after_a_full_update() {
        for rule in [UpdateRule::GapPropagation, UpdateRule::TowardObservation] {
            let mut rep = repertoire(50, 0.2, 0.8);
            let g = rep.individuals()[3].genotype.clone();
            let obs = observed(&rep, 3, [0.07, -0.02]);
            let cfg = UpdateConfig {
                rule,
                ..UpdateConfig::default()
            };
            update_repertoire(&mut rep, &g, &obs, 0.0, 1.0, None, &cfg).unwrap();
            let ind = &rep.individuals()[3];
            for d in 0..2 {
                assert!((ind.compensated_at(d) - obs.values()[d]).abs() < 1e-12);
            }
            assert_eq!(ind.compensation[2], 0.0);
        }
    }

    #[test]
    fn influence_decays_with_genotype_distance() {
        let mut rep = repertoire(50, 0.2, 0.8);
        let g = rep.individuals()[3].genotype.clone();
        let obs = observed(&rep, 3, [0.1, 0.0]);
        update_repertoire(&mut rep, &g, &obs, 0.0, 1.0, None, &UpdateConfig::default()).unwrap();
        let mut pairs: Vec<(f64, f64)> = rep
            .individuals()
            .iter()
            .map(|i| (i.genotype.distance(&g), i.compensation[0]))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(pairs.iter().all(|p| p.1 > 0.0));
    }

    #[test]
    fn far_members_are_untouched() {
        let mut rep = repertoire(50, 0.2, 0.8);
        let g = rep.individuals()[3].genotype.clone();
        let obs = observed(&rep, 3, [0.1, 0.1]);
        let cfg = UpdateConfig {
            kernel_scale: 1e4,
            ..UpdateConfig::default()
        };
        let n = update_repertoire(&mut rep, &g, &obs, 0.0, 1.0, None, &cfg).unwrap();
        assert_eq!(n, 1);
        for (i, ind) in rep.individuals().iter().enumerate() {
            if i != 3 {
                assert!(ind.compensation.iter().all(|c| c.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn action_only_update_touches_one_member() {
        let mut rep = repertoire(50, 0.2, 0.8);
        let g = rep.individuals()[3].genotype.clone();
        let obs = observed(&rep, 3, [0.1, 0.1]);
        let cfg = UpdateConfig {
            action_only: true,
            ..UpdateConfig::default()
        };
        assert_eq!(update_repertoire(&mut rep, &g, &obs, 0.0, 0.5, None, &cfg).unwrap(), 1);
    }

    #[test]
    fn unseen_trial_is_inserted_and_propagates_against_its_expectation() {
        let mut rep = repertoire(50, 0.2, 0.8);
        let g = Genotype::new(vec![0.5, 0.5, 0.5]).unwrap();
        let d = Linear::exact();
        let expected = d.control(g.values());
        let obs = Behavior::new(vec![expected[0] + 0.1, expected[1], 0.5]).unwrap();
        let n = update_repertoire(&mut rep, &g, &obs, 0.0, 1.0, Some(&expected), &UpdateConfig::default()).unwrap();
        assert_eq!(rep.len(), 51);
        assert_eq!(n, 50);
        let new = rep.individuals().last().unwrap();
        assert_eq!(new.compensated(), obs.values());
    }

    #[test]
    fn update_rejects_bad_lambda() {
        let mut rep = repertoire(5, 0.2, 0.8);
        let g = rep.individuals()[0].genotype.clone();
        let obs = rep.individuals()[0].behavior.clone();
        assert!(update_repertoire(&mut rep, &g, &obs, 0.0, 1.5, None, &UpdateConfig::default()).is_err());
    }
}
