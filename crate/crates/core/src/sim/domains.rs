//! Throw and lever evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arm::ArmModel;
use super::ballistics::ballistic_landing;
use super::trajectory::JointTrajectory;
use super::{DomainConfig, Evaluation, FailureReason};
use crate::archive::{Behavior, Genotype};

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

/// Decodes final positions and velocities from the first `2J` genes.
fn decode_joint_targets(arm: &ArmModel, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let j = arm.joint_count();
    let (pl, vl) = (arm.position_limit, arm.velocity_limit);
    let qf = v[..j].iter().map(|u| lerp(-pl, pl, *u)).collect();
    let vf = v[j..2 * j].iter().map(|u| lerp(-vl, vl, *u)).collect();
    (qf, vf)
}

fn build(arm: &ArmModel, v: &[f64], duration: f64, offsets: &[f64]) -> JointTrajectory {
    let (qf, vf) = decode_joint_targets(arm, v);
    let zeros = vec![0.0; arm.joint_count()];
    JointTrajectory::new(&arm.home, &zeros, &qf, &vf, duration, offsets)
        .expect("decoded trajectory has consistent lengths and positive duration")
}

fn sample_time(duration: f64, s: usize, samples: usize) -> f64 {
    duration * s as f64 / (samples - 1) as f64
}

/// Joint position and acceleration limits are checked analytically, velocity
/// and ground clearance at the uniform samples.
fn check_constraints(cfg: &DomainConfig, traj: &JointTrajectory) -> Result<(), FailureReason> {
    let arm = &cfg.arm;
    for (c, off) in traj.joints.iter().zip(&traj.offsets) {
        let mut worst = (c.position(0.0) + off).abs().max((c.position(c.duration) + off).abs());
        for t in c.stationary_points() {
            worst = worst.max((c.position(t) + off).abs());
        }
        if worst > arm.position_limit {
            return Err(FailureReason::JointLimit);
        }
    }
    for s in 0..cfg.samples {
        let t = sample_time(traj.duration, s, cfg.samples);
        if traj.joints.iter().any(|c| c.velocity(t).abs() > arm.velocity_limit) {
            return Err(FailureReason::VelocityLimit);
        }
    }
    // Acceleration is linear in time, so its extremes sit at the ends.
    let accel = |c: &super::Cubic| c.acceleration(0.0).abs().max(c.acceleration(c.duration).abs());
    if traj.joints.iter().any(|c| accel(c) > arm.acceleration_limit) {
        return Err(FailureReason::AccelerationLimit);
    }
    let mut q = vec![0.0; arm.joint_count()];
    for s in 0..cfg.samples {
        let t = sample_time(traj.duration, s, cfg.samples);
        traj.positions_into(t, &mut q);
        if arm.fk(&q)[2] <= 0.0 {
            return Err(FailureReason::GroundCollision);
        }
    }
    Ok(())
}

fn push_waypoints(cfg: &DomainConfig, traj: &JointTrajectory, out: &mut Vec<f64>) {
    for f in &cfg.waypoint_fractions {
        out.extend(cfg.arm.gripper_position(traj, f * traj.duration));
    }
}

fn mean_effort(cfg: &DomainConfig, traj: &JointTrajectory) -> f64 {
    let mut total = 0.0;
    for s in 0..cfg.samples {
        let t = sample_time(traj.duration, s, cfg.samples);
        total += traj
            .joints
            .iter()
            .map(|c| c.acceleration(t).powi(2))
            .sum::<f64>()
            .sqrt();
    }
    total / cfg.samples as f64
}

pub(super) fn eval_throw(cfg: &DomainConfig, offsets: &[f64], delay: f64, g: &Genotype) -> Evaluation {
    let v = g.values();
    let j = cfg.joint_count();
    let duration = lerp(cfg.duration_range.0, cfg.duration_range.1, v[2 * j]);
    let traj = build(&cfg.arm, v, duration, offsets);
    if let Err(r) = check_constraints(cfg, &traj) {
        return Evaluation::Invalid(r);
    }
    let release = duration + delay;
    let p = cfg.arm.gripper_position(&traj, release);
    let vel = cfg.arm.gripper_velocity(&traj, release, release);
    let Some(landing) = ballistic_landing(p, vel, cfg.gravity) else {
        return Evaluation::Invalid(FailureReason::NoLanding);
    };
    let mut b = Vec::with_capacity(cfg.behavior_dim());
    b.extend(landing.point);
    push_waypoints(cfg, &traj, &mut b);
    match Behavior::new(b) {
        Ok(behavior) => Evaluation::Valid {
            behavior,
            quality: -mean_effort(cfg, &traj),
        },
        Err(_) => Evaluation::Invalid(FailureReason::NoLanding),
    }
}

/// Deepest approach of the gripper to the lever tip, if within the contact
/// radius: returns the planar push `(dx, dy)` at that sample.
fn lever_contact(cfg: &DomainConfig, traj: &JointTrajectory) -> Option<[f64; 2]> {
    let tip = cfg.lever_tip;
    let mut q = vec![0.0; cfg.joint_count()];
    let mut best: Option<(f64, [f64; 2])> = None;
    for s in 0..cfg.samples {
        let t = sample_time(traj.duration, s, cfg.samples);
        traj.positions_into(t, &mut q);
        let p = cfg.arm.fk(&q);
        let d = [p[0] - tip[0], p[1] - tip[1], p[2] - tip[2]];
        let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if dist < cfg.contact_radius && best.is_none_or(|(b, _)| dist < b) {
            best = Some((dist, [d[0], d[1]]));
        }
    }
    best.map(|(_, d)| d)
}

fn lever_angles(cfg: &DomainConfig, push: [f64; 2]) -> [f64; 2] {
    let c = cfg.angle_clamp;
    [
        (cfg.angle_gain * push[0]).clamp(-c, c),
        (cfg.angle_gain * push[1]).clamp(-c, c),
    ]
}

/// Seed for the robustness replicas, derived from the genotype bits so that
/// evaluation stays a pure function.
fn genotype_seed(g: &Genotype) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for v in g.values() {
        h ^= v.to_bits();
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub(super) fn eval_lever(cfg: &DomainConfig, offsets: &[f64], g: &Genotype) -> Evaluation {
    let v = g.values();
    let traj = build(&cfg.arm, v, cfg.duration, offsets);
    if let Err(r) = check_constraints(cfg, &traj) {
        return Evaluation::Invalid(r);
    }
    let Some(push) = lever_contact(cfg, &traj) else {
        return Evaluation::Invalid(FailureReason::NoContact);
    };
    let angles = lever_angles(cfg, push);

    let mut rng = ChaCha8Rng::seed_from_u64(genotype_seed(g));
    let n = cfg.robustness_replicas;
    let (mut roll, mut pitch) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut noisy = vec![0.0; v.len()];
    for _ in 0..n {
        for (o, x) in noisy.iter_mut().zip(v) {
            let e = if cfg.robustness_noise > 0.0 {
                rng.random_range(-cfg.robustness_noise..=cfg.robustness_noise)
            } else {
                0.0
            };
            *o = (x + e).clamp(0.0, 1.0);
        }
        let replica = build(&cfg.arm, &noisy, cfg.duration, offsets);
        let a = lever_contact(cfg, &replica).map_or([0.0, 0.0], |p| lever_angles(cfg, p));
        roll.push(a[0]);
        pitch.push(a[1]);
    }
    let quality = -0.5 * (sample_std(&roll) + sample_std(&pitch));

    let mut b = Vec::with_capacity(cfg.behavior_dim());
    b.extend(angles);
    push_waypoints(cfg, &traj, &mut b);
    Evaluation::Valid {
        behavior: Behavior::new(b).expect("lever behavior is finite"),
        quality,
    }
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::super::{Domain, GapConfig, SimDomain};
    use super::*;

    fn home_throw() -> Genotype {
        // qf = home, vf = 0, mid duration
        Genotype::new(vec![0.5; 9]).unwrap()
    }

    #[test]
    fn throw_from_rest_drops_below_gripper() {
        let d = SimDomain::throw();
        let e = d.evaluate(&home_throw());
        let b = e.behavior().expect("valid");
        // Gripper stays at (1.2, 0, 1) and the ball falls straight down.
        assert!((b.values()[0] - 1.2).abs() < 1e-6);
        assert!(b.values()[1].abs() < 1e-6);
        assert_eq!(b.len(), 11);
        assert_eq!(e.quality(), Some(-0.0));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let d = SimDomain::lever();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = Genotype::new((0..8).map(|_| rng.random::<f64>()).collect()).unwrap();
            assert_eq!(d.evaluate(&g), d.evaluate(&g));
        }
    }

    #[test]
    fn zero_gap_is_identical() {
        let a = SimDomain::throw();
        let b = a
            .with_gap(GapConfig {
                joint_offsets: vec![0.0; 4],
                release_delay: 0.0,
            })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let g = Genotype::new((0..9).map(|_| rng.random::<f64>()).collect()).unwrap();
            assert_eq!(a.evaluate(&g), b.evaluate(&g));
        }
    }

    #[test]
    fn joint_limit_takes_precedence() {
        let d = SimDomain::throw();
        // Ending at the limit while moving back inward overshoots it first.
        let mut v = vec![0.5; 9];
        v[1] = 1.0;
        v[5] = 0.0;
        v[8] = 1.0;
        let g = Genotype::new(v).unwrap();
        assert_eq!(d.evaluate(&g).failure(), Some(FailureReason::JointLimit));
    }

    #[test]
    fn offsets_beyond_limit_fail() {
        let d = SimDomain::throw()
            .with_gap(GapConfig {
                joint_offsets: vec![2.0, 0.0, 0.0, 0.0],
                release_delay: 0.0,
            })
            .unwrap();
        assert_eq!(d.evaluate(&home_throw()).failure(), Some(FailureReason::JointLimit));
    }

    #[test]
    fn shoulder_offset_moves_landing() {
        let base = SimDomain::throw();
        let gapped = base
            .with_gap(GapConfig {
                joint_offsets: vec![0.05, 0.05, 0.0, 0.0],
                release_delay: 0.0,
            })
            .unwrap();
        let g = home_throw();
        let a = base.evaluate(&g);
        let b = gapped.evaluate(&g);
        let (a, b) = (a.behavior().unwrap().values(), b.behavior().unwrap().values());
        let shift = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        assert!(shift > 0.01, "{shift}");
    }

    #[test]
    fn lever_random_validity_is_low() {
        let d = SimDomain::lever();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let valid = (0..n)
            .filter(|_| {
                let g = Genotype::new((0..8).map(|_| rng.random::<f64>()).collect()).unwrap();
                d.evaluate(&g).is_valid()
            })
            .count();
        let rate = valid as f64 / n as f64;
        assert!(rate < 0.05, "random validity {rate}");
        assert!(valid > 0, "no random lever contact at all");
    }

    #[test]
    fn lever_angles_are_clamped() {
        let cfg = DomainConfig::lever();
        assert_eq!(lever_angles(&cfg, [1.0, -1.0]), [0.6, -0.6]);
        assert_eq!(lever_angles(&cfg, [0.01, 0.0]), [0.06, 0.0]);
    }

    #[test]
    fn seed_depends_on_every_gene() {
        let a = Genotype::new(vec![0.1, 0.2]).unwrap();
        let b = Genotype::new(vec![0.2, 0.1]).unwrap();
        assert_ne!(genotype_seed(&a), genotype_seed(&b));
    }
}
