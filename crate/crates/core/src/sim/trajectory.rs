//! Third-order polynomial joint trajectories.

use crate::error::{contract, Result};

/// `q(t) = a0 + a1·t + a2·t² + a3·t³`, fitted to position and velocity at
/// both ends of `[0, T]`. Evaluation outside that interval extrapolates the
/// same polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub coeffs: [f64; 4],
    pub duration: f64,
}

impl Cubic {
    pub fn fit(q0: f64, v0: f64, qf: f64, vf: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(contract(format!(
                "trajectory duration must be positive, got {duration}"
            )));
        }
        let t = duration;
        let delta = qf - q0;
        let a2 = (3.0 * delta - (2.0 * v0 + vf) * t) / (t * t);
        let a3 = (-2.0 * delta + (v0 + vf) * t) / (t * t * t);
        Ok(Self {
            coeffs: [q0, v0, a2, a3],
            duration,
        })
    }

    #[inline]
    pub fn position(&self, t: f64) -> f64 {
        let [a0, a1, a2, a3] = self.coeffs;
        a0 + t * (a1 + t * (a2 + t * a3))
    }

    #[inline]
    pub fn velocity(&self, t: f64) -> f64 {
        let [_, a1, a2, a3] = self.coeffs;
        a1 + t * (2.0 * a2 + 3.0 * a3 * t)
    }

    #[inline]
    pub fn acceleration(&self, t: f64) -> f64 {
        let [_, _, a2, a3] = self.coeffs;
        2.0 * a2 + 6.0 * a3 * t
    }

    /// Times in the open interval `(0, T)` where the velocity vanishes.
    pub fn stationary_points(&self) -> Vec<f64> {
        let [_, a1, a2, a3] = self.coeffs;
        // 3·a3·t² + 2·a2·t + a1 = 0
        let (a, b, c) = (3.0 * a3, 2.0 * a2, a1);
        let mut roots = Vec::with_capacity(2);
        if a.abs() < 1e-14 {
            if b.abs() > 1e-14 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((-b - s) / (2.0 * a));
                roots.push((-b + s) / (2.0 * a));
            }
        }
        roots.retain(|&t| t > 0.0 && t < self.duration);
        roots
    }

    /// Largest `|q(t)|` over `[0, T]`, found analytically.
    pub fn max_abs_position(&self) -> f64 {
        let mut m = self.position(0.0).abs().max(self.position(self.duration).abs());
        for t in self.stationary_points() {
            m = m.max(self.position(t).abs());
        }
        m
    }
}

/// One cubic per joint plus a constant per-joint offset added to every
/// position sample (used to inject calibration errors).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub joints: Vec<Cubic>,
    pub offsets: Vec<f64>,
    pub duration: f64,
}

impl JointTrajectory {
    /// Rest-or-moving start `(q0, v0)` to `(qf, vf)` over `duration` seconds.
    pub fn new(q0: &[f64], v0: &[f64], qf: &[f64], vf: &[f64], duration: f64, offsets: &[f64]) -> Result<Self> {
        let j = q0.len();
        if v0.len() != j || qf.len() != j || vf.len() != j || offsets.len() != j {
            return Err(contract("joint trajectory inputs have inconsistent lengths"));
        }
        let joints = (0..j)
            .map(|i| Cubic::fit(q0[i], v0[i], qf[i], vf[i], duration))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            joints,
            offsets: offsets.to_vec(),
            duration,
        })
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn positions_into(&self, t: f64, out: &mut [f64]) {
        for ((o, c), off) in out.iter_mut().zip(&self.joints).zip(&self.offsets) {
            *o = c.position(t) + off;
        }
    }

    pub fn positions(&self, t: f64) -> Vec<f64> {
        let mut q = vec![0.0; self.joints.len()];
        self.positions_into(t, &mut q);
        q
    }

    pub fn velocities(&self, t: f64) -> Vec<f64> {
        self.joints.iter().map(|c| c.velocity(t)).collect()
    }

    pub fn accelerations(&self, t: f64) -> Vec<f64> {
        self.joints.iter().map(|c| c.acceleration(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_to_rest_midpoint() {
        let c = Cubic::fit(0.0, 0.0, 1.0, 0.0, 2.0).unwrap();
        assert!((c.position(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_fixed_point() {
        let c = Cubic::fit(0.7, 0.0, 0.7, 0.0, 1.3).unwrap();
        for i in 0..=20 {
            let t = 1.3 * i as f64 / 20.0;
            assert_eq!(c.position(t), 0.7);
        }
    }

    #[test]
    fn moving_ends_against_integrated_velocity() {
        let c = Cubic::fit(0.0, 1.0, 0.0, -1.0, 1.0).unwrap();
        // a2 = (0 - (2 - 1)) = -1, a3 = (0 + 0) = 0 -> q(0.5) = 0.5 - 0.25 = 0.25
        assert_eq!(c.coeffs, [0.0, 1.0, -1.0, 0.0]);
        assert!((c.position(0.5) - 0.25).abs() < 1e-15);
        // Trapezoidal integration of the velocity from 0 to 0.5.
        let steps = 100_000;
        let dt = 0.5 / steps as f64;
        let mut q = 0.0;
        for k in 0..steps {
            let t = k as f64 * dt;
            q += 0.5 * (c.velocity(t) + c.velocity(t + dt)) * dt;
        }
        assert!((q - 0.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_duration() {
        assert!(Cubic::fit(0.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(Cubic::fit(0.0, 0.0, 1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn analytic_extremum_catches_overshoot() {
        // Leaving 0 with a large outward velocity overshoots the endpoint.
        let c = Cubic::fit(0.0, 4.0, 1.0, 0.0, 1.0).unwrap();
        assert!(c.max_abs_position() > 1.0);
        let t = c.stationary_points();
        assert!(!t.is_empty());
        assert!(c.velocity(t[0]).abs() < 1e-12);
    }
}
