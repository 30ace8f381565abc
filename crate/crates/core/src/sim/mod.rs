//! Deterministic kinematic evaluation domains.
//!
//! Both domains decode a normalized genotype into final joint positions and
//! velocities (and, for the throw, a motion duration), fit one cubic per joint
//! from the home pose at rest, and check joint, velocity and ground
//! constraints along the motion. Gap injection adds constant joint offsets and
//! an optional gripper release delay.

pub mod arm;
pub mod ballistics;
mod domains;
pub mod trajectory;

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub use arm::{ArmModel, Axis};
pub use ballistics::{ballistic_landing, Landing};
pub use trajectory::{Cubic, JointTrajectory};

use crate::archive::{Behavior, Genotype};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Throw,
    Lever,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Throw => "throw",
            DomainKind::Lever => "lever",
        })
    }
}

impl std::str::FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "throw" => Ok(DomainKind::Throw),
            "lever" => Ok(DomainKind::Lever),
            other => Err(Error::Config(format!(
                "unknown domain {other:?} (expected throw or lever)"
            ))),
        }
    }
}

/// Domain parameters. Units are SI, angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub arm: ArmModel,
    /// Throw: range the duration gene maps onto.
    pub duration_range: (f64, f64),
    /// Lever: fixed motion duration.
    pub duration: f64,
    /// Fractions of the motion duration at which the gripper is recorded.
    pub waypoint_fractions: Vec<f64>,
    pub lever_tip: [f64; 3],
    pub contact_radius: f64,
    pub angle_gain: f64,
    pub angle_clamp: f64,
    pub gravity: f64,
    /// Uniform samples used for constraint checks and effort.
    pub samples: usize,
    pub robustness_replicas: usize,
    pub robustness_noise: f64,
    /// Landing coordinates are normalized over `[-landing_bound, landing_bound]`.
    pub landing_bound: f64,
    pub l_repertoire: f64,
    /// Control-space success tolerance (meters for throw, radians for lever).
    pub tolerance: f64,
}

impl DomainConfig {
    pub fn throw() -> Self {
        Self {
            kind: DomainKind::Throw,
            arm: ArmModel::default(),
            duration_range: (0.3, 2.0),
            duration: 3.0,
            waypoint_fractions: vec![0.25, 0.5, 0.75],
            lever_tip: [0.55, -0.45, 0.3],
            contact_radius: 0.08,
            angle_gain: 6.0,
            angle_clamp: 0.6,
            gravity: 9.81,
            samples: 100,
            robustness_replicas: 10,
            robustness_noise: 0.01,
            landing_bound: 2.5,
            l_repertoire: 0.01,
            tolerance: 0.05,
        }
    }

    pub fn lever() -> Self {
        Self {
            kind: DomainKind::Lever,
            waypoint_fractions: vec![1.0 / 3.0, 2.0 / 3.0],
            l_repertoire: 0.05,
            tolerance: 10f64.to_radians(),
            ..Self::throw()
        }
    }

    pub fn for_kind(kind: DomainKind) -> Self {
        match kind {
            DomainKind::Throw => Self::throw(),
            DomainKind::Lever => Self::lever(),
        }
    }

    /// Parses a JSON document. Missing fields take the defaults of the
    /// document's `kind` (throw when absent); unknown fields are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        let Value::Object(mut obj) = doc else {
            return Err(Error::Config("domain config must be a JSON object".into()));
        };
        let kind = match obj.get("kind") {
            None => DomainKind::Throw,
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("kind: {e}")))?,
        };
        let mut base = serde_json::to_value(Self::for_kind(kind))?;
        if let (Some(Value::Object(arm)), Some(Value::Object(base_arm))) = (obj.remove("arm"), base.get_mut("arm")) {
            for (k, v) in arm {
                base_arm.insert(k, v);
            }
        }
        let base_obj = base.as_object_mut().expect("config serializes to an object");
        for (k, v) in obj {
            base_obj.insert(k, v);
        }
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.arm.validate().map_err(|e| Error::Config(e.to_string()))?;
        let (lo, hi) = self.duration_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return bad("duration_range must satisfy 0 < lo <= hi");
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if self.waypoint_fractions.is_empty() || self.waypoint_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return bad("waypoint fractions must lie in (0, 1]");
        }
        if !(self.contact_radius > 0.0 && self.contact_radius.is_finite()) {
            return bad("contact radius must be positive");
        }
        if !(self.angle_gain.is_finite() && self.angle_clamp > 0.0 && self.angle_clamp.is_finite()) {
            return bad("angle gain must be finite and clamp positive");
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return bad("gravity must be positive");
        }
        if self.samples < 2 {
            return bad("at least two samples are needed");
        }
        if self.robustness_replicas < 2 || !(self.robustness_noise >= 0.0 && self.robustness_noise.is_finite()) {
            return bad("robustness needs >= 2 replicas and a non-negative noise");
        }
        if !(self.landing_bound > 0.0 && self.landing_bound.is_finite()) {
            return bad("landing bound must be positive");
        }
        if !(self.l_repertoire >= 0.0 && self.l_repertoire.is_finite()) {
            return bad("l_repertoire must be non-negative");
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad("tolerance must be positive");
        }
        if self.lever_tip.iter().any(|v| !v.is_finite()) {
            return bad("lever tip must be finite");
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.arm.joint_count()
    }

    pub fn genotype_dim(&self) -> usize {
        let j = self.joint_count();
        match self.kind {
            DomainKind::Throw => 2 * j + 1,
            DomainKind::Lever => 2 * j,
        }
    }

    pub fn behavior_dim(&self) -> usize {
        2 + 3 * self.waypoint_fractions.len()
    }

    pub fn control_dims(&self) -> Vec<usize> {
        vec![0, 1]
    }

    /// Normalization bounds: control pair first, then each waypoint's
    /// `(x, y, z)` over the arm's reach box above the ground.
    pub fn behavior_bounds(&self) -> Vec<(f64, f64)> {
        let c = match self.kind {
            DomainKind::Throw => self.landing_bound,
            DomainKind::Lever => self.angle_clamp,
        };
        let reach = self.arm.reach();
        let z_lo = (self.arm.base_height - reach).max(0.0);
        let z_hi = self.arm.base_height + reach;
        let mut b = vec![(-c, c), (-c, c)];
        for _ in &self.waypoint_fractions {
            b.extend([(-reach, reach), (-reach, reach), (z_lo, z_hi)]);
        }
        b
    }

    /// Physical width of each genotype coordinate.
    pub fn genotype_scale(&self) -> Vec<f64> {
        let j = self.joint_count();
        let mut s = vec![2.0 * self.arm.position_limit; j];
        s.extend(std::iter::repeat_n(2.0 * self.arm.velocity_limit, j));
        if self.kind == DomainKind::Throw {
            s.push(self.duration_range.1 - self.duration_range.0);
        }
        s
    }
}

/// Simulated mis-configuration applied at evaluation time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    /// Added to every commanded joint position. Empty means all zero.
    pub joint_offsets: Vec<f64>,
    /// Extra time before the gripper releases the ball (throw only).
    pub release_delay: f64,
}

impl GapConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let gap: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        if gap.joint_offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("joint offsets must be finite".into()));
        }
        if !(gap.release_delay >= 0.0 && gap.release_delay.is_finite()) {
            return Err(Error::Config("release_delay must be non-negative".into()));
        }
        Ok(gap)
    }

    pub fn validate_for(&self, joints: usize) -> Result<()> {
        if !self.joint_offsets.is_empty() && self.joint_offsets.len() != joints {
            return Err(Error::Config(format!(
                "gap has {} joint offsets, arm has {joints} joints",
                self.joint_offsets.len()
            )));
        }
        if !(self.release_delay >= 0.0 && self.release_delay.is_finite()) {
            return Err(Error::Config("release_delay must be non-negative".into()));
        }
        Ok(())
    }

    pub fn offsets(&self, joints: usize) -> Vec<f64> {
        if self.joint_offsets.is_empty() {
            vec![0.0; joints]
        } else {
            self.joint_offsets.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.joint_offsets.iter().all(|v| *v == 0.0) && self.release_delay == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    JointLimit,
    VelocityLimit,
    AccelerationLimit,
    GroundCollision,
    NoContact,
    NoLanding,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::JointLimit => "joint_limit",
            FailureReason::VelocityLimit => "velocity_limit",
            FailureReason::AccelerationLimit => "acceleration_limit",
            FailureReason::GroundCollision => "ground_collision",
            FailureReason::NoContact => "no_contact",
            FailureReason::NoLanding => "no_landing",
        })
    }
}

/// Result of running one action.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Valid { behavior: Behavior, quality: f64 },
    Invalid(FailureReason),
}

impl Evaluation {
    pub fn is_valid(&self) -> bool {
        matches!(self, Evaluation::Valid { .. })
    }

    pub fn behavior(&self) -> Option<&Behavior> {
        match self {
            Evaluation::Valid { behavior, .. } => Some(behavior),
            Evaluation::Invalid(_) => None,
        }
    }

    pub fn quality(&self) -> Option<f64> {
        match self {
            Evaluation::Valid { quality, .. } => Some(*quality),
            Evaluation::Invalid(_) => None,
        }
    }

    pub fn failure(&self) -> Option<FailureReason> {
        match self {
            Evaluation::Invalid(r) => Some(*r),
            Evaluation::Valid { .. } => None,
        }
    }
}

/// An evaluation function `genotype → behavior` with its descriptor layout.
pub trait Domain: Sync {
    fn name(&self) -> &str;
    fn genotype_dim(&self) -> usize;
    fn behavior_bounds(&self) -> Vec<(f64, f64)>;
    fn control_dims(&self) -> Vec<usize>;
    fn default_l_repertoire(&self) -> f64;
    /// Control-space distance below which a goal counts as reached.
    fn success_tolerance(&self) -> f64;
    /// Per-coordinate genotype scale used by the compensation kernel.
    fn genotype_scale(&self) -> Vec<f64> {
        vec![1.0; self.genotype_dim()]
    }
    /// Stable digest of everything that affects evaluation.
    fn config_hash(&self) -> String;
    fn evaluate(&self, g: &Genotype) -> Evaluation;
}

/// One of the built-in arm domains with an optional gap applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDomain {
    cfg: DomainConfig,
    gap: GapConfig,
    offsets: Vec<f64>,
    name: String,
}

impl SimDomain {
    pub fn new(cfg: DomainConfig, gap: GapConfig) -> Result<Self> {
        cfg.validate()?;
        gap.validate_for(cfg.joint_count())?;
        let offsets = gap.offsets(cfg.joint_count());
        let name = cfg.kind.to_string();
        Ok(Self {
            cfg,
            gap,
            offsets,
            name,
        })
    }

    pub fn throw() -> Self {
        Self::new(DomainConfig::throw(), GapConfig::none()).expect("default throw config is valid")
    }

    pub fn lever() -> Self {
        Self::new(DomainConfig::lever(), GapConfig::none()).expect("default lever config is valid")
    }

    pub fn config(&self) -> &DomainConfig {
        &self.cfg
    }

    pub fn gap(&self) -> &GapConfig {
        &self.gap
    }

    /// Same domain evaluated under a different gap.
    pub fn with_gap(&self, gap: GapConfig) -> Result<Self> {
        Self::new(self.cfg.clone(), gap)
    }
}

impl Domain for SimDomain {
    fn name(&self) -> &str {
        &self.name
    }

    fn genotype_dim(&self) -> usize {
        self.cfg.genotype_dim()
    }

    fn behavior_bounds(&self) -> Vec<(f64, f64)> {
        self.cfg.behavior_bounds()
    }

    fn control_dims(&self) -> Vec<usize> {
        self.cfg.control_dims()
    }

    fn default_l_repertoire(&self) -> f64 {
        self.cfg.l_repertoire
    }

    fn success_tolerance(&self) -> f64 {
        self.cfg.tolerance
    }

    fn genotype_scale(&self) -> Vec<f64> {
        self.cfg.genotype_scale()
    }

    fn config_hash(&self) -> String {
        let doc = serde_json::json!({ "domain": self.cfg, "gap": self.gap });
        let digest = Sha256::digest(doc.to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    fn evaluate(&self, g: &Genotype) -> Evaluation {
        if g.len() != self.cfg.genotype_dim() {
            // Wrong-length genotypes never decode to an action.
            return Evaluation::Invalid(FailureReason::JointLimit);
        }
        match self.cfg.kind {
            DomainKind::Throw => domains::eval_throw(&self.cfg, &self.offsets, self.gap.release_delay, g),
            DomainKind::Lever => domains::eval_lever(&self.cfg, &self.offsets, g),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_follow_the_arm() {
        let t = DomainConfig::throw();
        assert_eq!(t.genotype_dim(), 9);
        assert_eq!(t.behavior_dim(), 11);
        assert_eq!(t.behavior_bounds().len(), 11);
        let l = DomainConfig::lever();
        assert_eq!(l.genotype_dim(), 8);
        assert_eq!(l.behavior_dim(), 8);
        assert_eq!(l.genotype_scale().len(), 8);
    }

    #[test]
    fn json_overrides_merge_over_kind_defaults() {
        let cfg =
            DomainConfig::from_json(r#"{"kind":"lever","contact_radius":0.1,"arm":{"base_height":0.9}}"#).unwrap();
        assert_eq!(cfg.kind, DomainKind::Lever);
        assert_eq!(cfg.contact_radius, 0.1);
        assert_eq!(cfg.arm.base_height, 0.9);
        assert_eq!(cfg.arm.link_lengths, vec![0.3; 4]);
        assert_eq!(cfg.l_repertoire, 0.05);
    }

    #[test]
    fn json_rejects_unknown_and_invalid() {
        assert!(DomainConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(DomainConfig::from_json(r#"{"contact_radius":0.0}"#).is_err());
        assert!(DomainConfig::from_json("[1,2]").is_err());
        assert!(DomainConfig::from_json("{").is_err());
    }

    #[test]
    fn gap_json() {
        let g = GapConfig::from_json(r#"{"joint_offsets":[0.05,0.05,0,0]}"#).unwrap();
        assert_eq!(g.release_delay, 0.0);
        assert!(g.validate_for(4).is_ok());
        assert!(g.validate_for(3).is_err());
        assert!(GapConfig::from_json(r#"{"release_delay":-1}"#).is_err());
        assert!(GapConfig::from_json("{}").unwrap().is_zero());
    }

    #[test]
    fn config_hash_tracks_gap() {
        let a = SimDomain::throw();
        let b = a
            .with_gap(GapConfig {
                joint_offsets: vec![0.05, 0.05, 0.0, 0.0],
                release_delay: 0.0,
            })
            .unwrap();
        assert_ne!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash(), SimDomain::throw().config_hash());
    }
}
