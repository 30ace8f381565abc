//! Parent selection and real-coded variation on `[0, 1]^n`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::archive::{Genotype, Repertoire};
use crate::error::{contract, Result};

/// Added to shifted novelty so the least novel member keeps a non-zero weight.
pub const SELECTION_DELTA: f64 = 1e-6;

pub fn random_genotype<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Genotype {
    Genotype::clamped((0..n).map(|_| rng.random::<f64>()).collect())
}

/// Draws `count` indices with replacement, proportionally to `weights`.
/// Entries with zero weight are never drawn.
pub fn sample_weighted<R: Rng + ?Sized>(weights: &[f64], count: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(weights).map_err(|e| contract(format!("selection weights: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Novelty-proportional selection weights: `novelty − min + δ`.
pub fn novelty_weights(novelty: &[f64]) -> Vec<f64> {
    let min = novelty.iter().copied().fold(f64::INFINITY, f64::min);
    novelty.iter().map(|v| v - min + SELECTION_DELTA).collect()
}

/// Samples `count` parent genotypes from the repertoire, with replacement and
/// proportionally to cached novelty. When the repertoire holds fewer than
/// `count` members only that many are drawn and the rest are uniform-random.
pub fn select_parents<R: Rng + ?Sized>(repertoire: &Repertoire, count: usize, rng: &mut R) -> Vec<Genotype> {
    let members = repertoire.individuals();
    let drawn = members.len().min(count);
    let mut out = Vec::with_capacity(count);
    if drawn > 0 {
        let novelty: Vec<f64> = members.iter().map(|i| i.novelty).collect();
        let idx = sample_weighted(&novelty_weights(&novelty), drawn, rng)
            .expect("shifted novelty weights are positive and finite");
        out.extend(idx.into_iter().map(|i| members[i].genotype.clone()));
    }
    let n = repertoire.genotype_dim();
    out.extend((drawn..count).map(|_| random_genotype(n, rng)));
    out
}

/// Simulated binary crossover applied gene-wise with probability `rate`.
///
/// Children are assigned to either side with equal probability, so each
/// child gene is unbiased around the parents' mean.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &Genotype,
    p2: &Genotype,
    rate: f64,
    eta: f64,
    rng: &mut R,
) -> Result<(Genotype, Genotype)> {
    if p1.len() != p2.len() {
        return Err(contract(format!("crossover of lengths {} and {}", p1.len(), p2.len())));
    }
    let mut c1 = p1.values().to_vec();
    let mut c2 = p2.values().to_vec();
    for i in 0..c1.len() {
        if rate <= 0.0 || rng.random::<f64>() >= rate {
            continue;
        }
        let (x1, x2) = (c1[i], c2[i]);
        if (x1 - x2).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.random();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let mut a = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
        let mut b = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
        if rng.random::<bool>() {
            std::mem::swap(&mut a, &mut b);
        }
        c1[i] = a;
        c2[i] = b;
    }
    Ok((Genotype::clamped(c1), Genotype::clamped(c2)))
}

/// Bounded polynomial mutation on `[0, 1]`, gene-wise with probability `rate`.
pub fn poly_mutation<R: Rng + ?Sized>(g: &Genotype, rate: f64, eta: f64, rng: &mut R) -> Genotype {
    let mut v = g.values().to_vec();
    let pow = 1.0 / (eta + 1.0);
    for x in &mut v {
        if rate <= 0.0 || rng.random::<f64>() >= rate {
            continue;
        }
        let r: f64 = rng.random();
        let dq = if r < 0.5 {
            let xy = 1.0 - *x;
            let val = 2.0 * r + (1.0 - 2.0 * r) * xy.powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = *x;
            let val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *x += dq;
    }
    Genotype::clamped(v)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::archive::{Behavior, Candidate};

    fn g(v: &[f64]) -> Genotype {
        Genotype::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_parents_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = g(&[0.1, 0.5, 0.9]);
        for _ in 0..100 {
            let (a, b) = sbx_crossover(&p, &p, 1.0, 15.0, &mut rng).unwrap();
            assert_eq!(a, p);
            assert_eq!(b, p);
        }
    }

    #[test]
    fn zero_rates_copy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (p1, p2) = (g(&[0.1, 0.2]), g(&[0.8, 0.7]));
        let (a, b) = sbx_crossover(&p1, &p2, 0.0, 15.0, &mut rng).unwrap();
        assert_eq!((a, b), (p1.clone(), p2));
        assert_eq!(poly_mutation(&p1, 0.0, 20.0, &mut rng), p1);
    }

    #[test]
    fn crossover_length_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(sbx_crossover(&g(&[0.1]), &g(&[0.1, 0.2]), 0.5, 15.0, &mut rng).is_err());
    }

    #[test]
    fn sbx_child_mean_matches_parent_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p1, p2) = (g(&[0.2, 0.2]), g(&[0.8, 0.8]));
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let (a, _) = sbx_crossover(&p1, &p2, 1.0, 15.0, &mut rng).unwrap();
            sum[0] += a.values()[0];
            sum[1] += a.values()[1];
        }
        for s in sum {
            assert!((s / n as f64 - 0.5).abs() < 1e-2);
        }
    }

    #[test]
    fn mutation_at_centre_is_unbiased_and_boundary_stays_in_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let centre = g(&[0.5]);
        let mean = (0..n)
            .map(|_| poly_mutation(&centre, 1.0, 20.0, &mut rng).values()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 1e-2, "{mean}");
        for edge in [0.0, 1.0] {
            for _ in 0..1000 {
                let x = poly_mutation(&g(&[edge]), 1.0, 20.0, &mut rng).values()[0];
                assert!((0.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn zero_weight_is_never_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let idx = sample_weighted(&[0.7, 0.0], 10_000, &mut rng).unwrap();
        assert!(idx.iter().all(|&i| i == 0));
    }

    #[test]
    fn uniform_weights_give_uniform_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 10_000;
        let idx = sample_weighted(&[1.0; 4], n, &mut rng).unwrap();
        // Binomial(n, 1/4) standard deviation.
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for k in 0..4 {
            let c = idx.iter().filter(|&&i| i == k).count() as f64;
            assert!((c - n as f64 * 0.25).abs() <= 3.0 * sigma, "bucket {k}: {c}");
        }
    }

    #[test]
    fn shortfall_is_filled_randomly() {
        let mut rep = Repertoire::new(2, vec![(0.0, 1.0)], vec![0], 0.1).unwrap();
        let only = g(&[0.25, 0.75]);
        rep.add_unchecked(Candidate {
            genotype: only.clone(),
            behavior: Behavior::new(vec![0.5]).unwrap(),
            quality: 0.0,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let parents = select_parents(&rep, 4, &mut rng);
        assert_eq!(parents.len(), 4);
        assert_eq!(parents[0], only);
        assert!(parents[1..].iter().all(|p| p != &only));
    }

    #[test]
    fn novelty_weights_are_positive() {
        let w = novelty_weights(&[-0.5, 0.2, -0.5]);
        assert!(w.iter().all(|&x| x > 0.0));
        assert_eq!(w[0], SELECTION_DELTA);
    }
}
