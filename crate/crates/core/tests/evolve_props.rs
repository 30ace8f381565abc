use proptest::prelude::*;
use qd_reach::archive::Genotype;
use qd_reach::evolve::{
    novelty_weights, poly_mutation, run_qd, run_random_baseline, sample_weighted, sbx_crossover, QdConfig,
};
use qd_reach::sim::SimDomain;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn genotype(d: usize) -> impl Strategy<Value = Genotype> {
    prop::collection::vec(0.0..=1.0f64, d).prop_map(|v| Genotype::new(v).unwrap())
}

fn in_unit_box(g: &Genotype) -> bool {
    g.values().iter().all(|v| (0.0..=1.0).contains(v))
}

fn small(seed: u64) -> QdConfig {
    QdConfig {
        population_size: 24,
        generations: 6,
        seed,
        ..QdConfig::default()
    }
}

proptest! {
    #[test]
    fn variation_stays_in_the_unit_box(
        a in genotype(9),
        b in genotype(9),
        rate in 0.0..=1.0f64,
        eta in 0.0..40.0f64,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, d) = sbx_crossover(&a, &b, rate, eta, &mut rng).unwrap();
        prop_assert!(in_unit_box(&c) && in_unit_box(&d));
        let m = poly_mutation(&a, rate, eta, &mut rng);
        prop_assert!(in_unit_box(&m));
    }

    #[test]
    fn zero_rates_are_identity(a in genotype(8), b in genotype(8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, d) = sbx_crossover(&a, &b, 0.0, 15.0, &mut rng).unwrap();
        prop_assert_eq!(&c, &a);
        prop_assert_eq!(&d, &b);
        prop_assert_eq!(&poly_mutation(&a, 0.0, 20.0, &mut rng), &a);
    }

    #[test]
    fn zero_weights_are_never_drawn(
        w in prop::collection::vec(prop_oneof![Just(0.0), 0.01..1.0f64], 2..12),
        seed in any::<u64>(),
    ) {
        prop_assume!(w.iter().any(|v| *v > 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in sample_weighted(&w, 200, &mut rng).unwrap() {
            prop_assert!(w[i] > 0.0);
        }
    }

    #[test]
    fn novelty_weights_are_positive(n in prop::collection::vec(-1.0..1.0f64, 1..20)) {
        prop_assert!(novelty_weights(&n).iter().all(|w| *w > 0.0 && w.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn archive_never_shrinks_and_budget_adds_up(seed in any::<u64>()) {
        let cfg = small(seed);
        let (rep, report) = run_qd(&cfg, &SimDomain::throw()).unwrap();
        prop_assert_eq!(report.records.len(), cfg.generations);
        let mut last = 0;
        for (t, r) in report.records.iter().enumerate() {
            prop_assert!(r.archive_size >= last);
            last = r.archive_size;
            prop_assert_eq!(r.evaluations_used, report.seeding_evaluations + (t + 1) * cfg.population_size);
            prop_assert!(r.invalid_count <= cfg.population_size);
        }
        prop_assert_eq!(report.seeding_evaluations, report.seeding_generations * cfg.population_size);
        prop_assert_eq!(rep.len(), last);
    }
}

#[test]
fn same_seed_same_repertoire() {
    let d = SimDomain::throw();
    for run in [run_qd::<SimDomain>, run_random_baseline::<SimDomain>] {
        let (a, ra) = run(&small(7), &d).unwrap();
        let (b, rb) = run(&small(7), &d).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        assert_eq!(ra.to_csv(), rb.to_csv());
    }
}
