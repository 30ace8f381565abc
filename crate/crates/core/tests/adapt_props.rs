use nalgebra::DMatrix;
use proptest::prelude::*;
use qd_reach::adapt::{
    confidence, cross_gap, estimate_jacobian, fit_jacobian, pseudo_inverse, reach, update_repertoire, AdaptStatus,
    JacobianConfig, UpdateConfig, UpdateRule,
};
use qd_reach::archive::{Behavior, Candidate, Genotype, Repertoire};
use qd_reach::sim::{Domain, Evaluation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Control behavior `A·g`, plus one diversity dimension.
struct Linear {
    a: [[f64; 3]; 2],
}

const A: [[f64; 3]; 2] = [[1.0, -0.5, 0.3], [0.2, 0.8, -0.4]];
const RANGE: f64 = 4.0;

impl Linear {
    fn control(&self, g: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .map(|row| row.iter().zip(g).map(|(a, x)| a * x).sum())
            .collect()
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
        let mut b = self.control(g.values());
        b.push(g.values()[2]);
        Evaluation::Valid {
            behavior: Behavior::new(b).unwrap(),
            quality: 0.0,
        }
    }
}

fn repertoire(d: &Linear, count: usize, seed: u64) -> Repertoire {
    let mut rep = Repertoire::new(3, d.behavior_bounds(), d.control_dims(), 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let g = Genotype::new((0..3).map(|_| rng.random_range(0.2..0.8)).collect()).unwrap();
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

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, r * c).prop_map(move |v| DMatrix::from_row_slice(r, c, &v))
}

fn well_conditioned(m: &DMatrix<f64>) -> bool {
    let s = m.clone().singular_values();
    s.min() > 0.05 * s.max()
}

fn compensations(rep: &Repertoire) -> Vec<Vec<f64>> {
    rep.individuals().iter().map(|i| i.compensation.clone()).collect()
}

proptest! {
    #[test]
    fn pseudo_inverse_is_a_right_inverse_of_full_row_rank(m in matrix(2, 3)) {
        prop_assume!(well_conditioned(&m));
        let p = pseudo_inverse(&m, 1e-8);
        prop_assert!((&m * &p - DMatrix::<f64>::identity(2, 2)).norm() < 1e-9);
        prop_assert!((&p * &m * &p - &p).norm() < 1e-9);
        prop_assert!((&m * &p).transpose().relative_eq(&(&m * &p), 1e-9, 1e-9));
    }

    #[test]
    fn fit_recovers_an_exact_linear_map(a in matrix(2, 3), g in matrix(3, 12)) {
        prop_assume!(well_conditioned(&g));
        let b = &a * &g;
        let j = fit_jacobian(&g, &b, 1e-6, 1e-8);
        prop_assert!((&j - &a).norm() < 1e-9);
        let residual = (&j * &g - &b).norm() / 12.0;
        prop_assert!((confidence(residual, 0.3) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn confidence_is_invariant_to_behavior_scale(
        a in matrix(2, 3),
        g in matrix(3, 10),
        noise in matrix(2, 10),
        c in 0.1..10.0f64,
    ) {
        prop_assume!(well_conditioned(&g));
        let b = &a * &g + noise * 0.05;
        let fit = |b: &DMatrix<f64>| {
            let j = fit_jacobian(&g, b, 1e-6, 1e-8);
            (j.clone(), (&j * &g - b).norm() / 10.0)
        };
        let (j1, r1) = fit(&b);
        let (jc, rc) = fit(&(&b * c));
        prop_assert!((&jc - &j1 * c).norm() < 1e-9 * c.max(1.0));
        prop_assert!((confidence(r1, 0.3) - confidence(rc, 0.3 * c)).abs() < 1e-9);
    }

    #[test]
    fn estimated_jacobian_matches_finite_differences(center in prop::collection::vec(0.35..0.65f64, 3)) {
        let d = Linear { a: A };
        let rep = repertoire(&d, 400, 3);
        let g = Genotype::new(center.clone()).unwrap();
        let anchor: Vec<f64> = d.control(&center).iter().map(|v| (v + 2.0) / RANGE).collect();
        let est = estimate_jacobian(&rep, &g, &anchor, 0.4, &JacobianConfig::default()).unwrap().unwrap();
        let h = 1e-6;
        for col in 0..3 {
            let mut up = center.clone();
            let mut dn = center.clone();
            up[col] += h;
            dn[col] -= h;
            let (bu, bd) = (d.control(&up), d.control(&dn));
            for row in 0..2 {
                let fd = (bu[row] - bd[row]) / (2.0 * h) / RANGE;
                prop_assert!((est.matrix[(row, col)] - fd).abs() < 1e-6);
            }
        }
        prop_assert!(est.residual < 1e-9);
    }

    #[test]
    fn reach_on_a_linear_map_takes_one_iteration(goal in prop::collection::vec(0.35..0.65f64, 3)) {
        let d = Linear { a: A };
        let rep = repertoire(&d, 300, 5);
        let target = d.control(&goal);
        let (g, trace) = reach(&rep, &target, &d, &JacobianConfig::for_reach()).unwrap();
        prop_assert!(trace.iterations() <= 1);
        prop_assert_eq!(trace.status, AdaptStatus::Converged);
        let reached = d.control(g.values());
        prop_assert!(reached.iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn reach_and_gapless_crossing_walk_the_same_path(goal in prop::collection::vec(0.3..0.7f64, 3), scale in 0.5..1.5f64) {
        let d = Linear { a: A };
        let rep = repertoire(&d, 200, 9);
        let curved = Linear { a: [[A[0][0] * scale, A[0][1], A[0][2]], A[1]] };
        let target = curved.control(&goal);
        let cfg = JacobianConfig::for_reach();
        let (g1, t1) = reach(&rep, &target, &d, &cfg).unwrap();
        let start = rep.nearest_behavior(&target, 1, true).unwrap()[0].0.genotype.clone();
        let (g2, t2) = cross_gap(&rep, &start, &target, &d, &cfg).unwrap();
        prop_assert_eq!(g1, g2);
        prop_assert_eq!(t1, t2);
    }

    #[test]
    fn zero_lambda_leaves_the_repertoire_alone(idx in 0usize..100, shift in -0.5..0.5f64) {
        let d = Linear { a: A };
        let mut rep = repertoire(&d, 100, 11);
        let before = rep.clone();
        let member = rep.individuals()[idx].clone();
        let mut b = member.behavior.values().to_vec();
        b[0] += shift;
        let n = update_repertoire(&mut rep, &member.genotype, &Behavior::new(b).unwrap(), 0.0, 0.0, None, &UpdateConfig::default()).unwrap();
        prop_assert_eq!(n, 0);
        prop_assert_eq!(rep, before);
    }

    #[test]
    fn closer_actions_move_at_least_as_much(idx in 0usize..100, shift in 0.01..0.5f64, lambda in 0.05..=1.0f64) {
        let d = Linear { a: A };
        let mut rep = repertoire(&d, 100, 13);
        let member = rep.individuals()[idx].clone();
        let mut b = member.behavior.values().to_vec();
        b[1] += shift;
        update_repertoire(&mut rep, &member.genotype, &Behavior::new(b).unwrap(), 0.0, lambda, None, &UpdateConfig::default()).unwrap();
        let mut moved: Vec<(f64, f64)> = rep
            .individuals()
            .iter()
            .map(|i| (i.genotype.distance(&member.genotype), i.compensation[1].abs()))
            .collect();
        moved.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in moved.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn full_confidence_update_makes_the_tested_action_exact(
        idx in 0usize..100,
        gap in prop::collection::vec(-0.3..0.3f64, 2),
        rule in prop_oneof![Just(UpdateRule::GapPropagation), Just(UpdateRule::TowardObservation)],
    ) {
        let d = Linear { a: A };
        let mut rep = repertoire(&d, 100, 17);
        let member = rep.individuals()[idx].clone();
        let mut b = member.behavior.values().to_vec();
        b[0] += gap[0];
        b[1] += gap[1];
        let cfg = UpdateConfig { rule, ..UpdateConfig::default() };
        update_repertoire(&mut rep, &member.genotype, &Behavior::new(b.clone()).unwrap(), 0.0, 1.0, None, &cfg).unwrap();
        let after = &rep.individuals()[idx];
        for (k, want) in b.iter().enumerate().take(2) {
            prop_assert!((after.compensated_at(k) - want).abs() < 1e-12);
        }
    }
}

#[test]
fn confidence_at_reference_residuals() {
    let th = 0.3;
    assert_eq!(confidence(0.0, th), 1.0);
    assert!((confidence(th / 2.0, th) - 0.5).abs() < 1e-15);
    assert_eq!(confidence(th, th), 0.0);
}

#[test]
fn action_only_update_touches_one_member() {
    let d = Linear { a: A };
    let mut rep = repertoire(&d, 50, 19);
    let before = compensations(&rep);
    let member = rep.individuals()[3].clone();
    let mut b = member.behavior.values().to_vec();
    b[0] += 0.1;
    let cfg = UpdateConfig {
        action_only: true,
        ..UpdateConfig::default()
    };
    let n = update_repertoire(
        &mut rep,
        &member.genotype,
        &Behavior::new(b).unwrap(),
        0.0,
        0.7,
        None,
        &cfg,
    )
    .unwrap();
    assert_eq!(n, 1);
    let after = compensations(&rep);
    assert_eq!(after.iter().zip(&before).filter(|(a, b)| a != b).count(), 1);
}
