//! Serial-chain arm geometry.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::trajectory::JointTrajectory;
use crate::error::{contract, Result};

/// Rotation axis of a revolute joint, expressed in the joint's parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// About z (yaw).
    Vertical,
    /// About y (pitch).
    Horizontal,
}

impl Axis {
    fn rotation(self, angle: f64) -> Matrix3<f64> {
        let (s, c) = angle.sin_cos();
        match self {
            Axis::Vertical => Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            Axis::Horizontal => Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
        }
    }
}

/// Kinematic chain mounted at `(0, 0, base_height)`. Every link extends along
/// the local x axis of its joint frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArmModel {
    pub axes: Vec<Axis>,
    pub link_lengths: Vec<f64>,
    pub base_height: f64,
    pub home: Vec<f64>,
    pub position_limit: f64,
    pub velocity_limit: f64,
    pub acceleration_limit: f64,
}

impl Default for ArmModel {
    fn default() -> Self {
        Self::with_joints(4)
    }
}

impl ArmModel {
    /// `joints` links of 0.3 m with alternating vertical/horizontal axes.
    pub fn with_joints(joints: usize) -> Self {
        Self {
            axes: (0..joints)
                .map(|i| if i % 2 == 0 { Axis::Vertical } else { Axis::Horizontal })
                .collect(),
            link_lengths: vec![0.3; joints],
            base_height: 1.0,
            home: vec![0.0; joints],
            position_limit: FRAC_PI_2,
            velocity_limit: 3.0,
            acceleration_limit: 4.0,
        }
    }

    pub fn joint_count(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.joint_count();
        if j < 2 {
            return Err(contract("arm needs at least two joints"));
        }
        if self.axes.len() != j || self.home.len() != j {
            return Err(contract("axes, link_lengths and home must have equal length"));
        }
        if self.link_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(contract("link lengths must be positive"));
        }
        if !(self.position_limit > 0.0 && self.velocity_limit > 0.0 && self.acceleration_limit > 0.0) {
            return Err(contract("joint limits must be positive"));
        }
        if !self.base_height.is_finite() || self.home.iter().any(|h| !h.is_finite()) {
            return Err(contract("non-finite arm geometry"));
        }
        Ok(())
    }

    /// Gripper position for joint angles `q`.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<[f64; 3]> {
        if q.len() != self.joint_count() {
            return Err(contract(format!(
                "expected {} joint angles, got {}",
                self.joint_count(),
                q.len()
            )));
        }
        Ok(self.fk(q))
    }

    pub(crate) fn fk(&self, q: &[f64]) -> [f64; 3] {
        let mut rot = Matrix3::identity();
        let mut p = Vector3::new(0.0, 0.0, self.base_height);
        for ((axis, len), angle) in self.axes.iter().zip(&self.link_lengths).zip(q) {
            rot *= axis.rotation(*angle);
            p += rot.column(0) * *len;
        }
        [p.x, p.y, p.z]
    }

    /// Gripper position along a trajectory at time `t`.
    pub fn gripper_position(&self, traj: &JointTrajectory, t: f64) -> [f64; 3] {
        self.fk(&traj.positions(t))
    }

    /// Gripper velocity by finite differences with a 1e-4 s step: central in
    /// the interior, second-order one-sided within one step of `0` or `end`.
    pub fn gripper_velocity(&self, traj: &JointTrajectory, t: f64, end: f64) -> [f64; 3] {
        const DT: f64 = 1e-4;
        let p = |t: f64| self.gripper_position(traj, t);
        let mut v = [0.0; 3];
        if t - DT < 0.0 {
            let (a, b, c) = (p(t), p(t + DT), p(t + 2.0 * DT));
            for i in 0..3 {
                v[i] = (-3.0 * a[i] + 4.0 * b[i] - c[i]) / (2.0 * DT);
            }
        } else if t + DT > end {
            let (a, b, c) = (p(t), p(t - DT), p(t - 2.0 * DT));
            for i in 0..3 {
                v[i] = (3.0 * a[i] - 4.0 * b[i] + c[i]) / (2.0 * DT);
            }
        } else {
            let (a, b) = (p(t - DT), p(t + DT));
            for i in 0..3 {
                v[i] = (b[i] - a[i]) / (2.0 * DT);
            }
        }
        v
    }
}
