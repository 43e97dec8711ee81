//! Serial-chain robot models and forward kinematics of their collision
//! primitives.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::{Isometry3, Point3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Owner, PlacedPrimitive, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("dimension mismatch: expected {expected} joints, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("joint {joint} at {value} outside limits [{lo}, {hi}]")]
    JointLimitViolation {
        joint: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("state for group {found} passed to model of group {expected}")]
    GroupMismatch { expected: GroupId, found: GroupId },
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Name of a move group (one independently controlled arm).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(pub String);

impl GroupId {
    pub fn new(name: impl Into<String>) -> Self {
        GroupId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for GroupId {
    fn from(s: &str) -> Self {
        GroupId(s.to_owned())
    }
}

/// A revolute joint: fixed offset from the parent frame followed by a
/// rotation about `axis`.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub axis: Unit<Vector3<f64>>,
    pub origin: Isometry3<f64>,
    pub limits: (f64, f64),
}

impl JointSpec {
    /// Builds a joint, normalizing `axis`. Fails on a zero axis or `lo > hi`.
    pub fn new(
        axis: Vector3<f64>,
        origin: Isometry3<f64>,
        limits: (f64, f64),
    ) -> Result<Self, KinematicsError> {
        let axis = Unit::try_new(axis, 1e-12)
            .ok_or_else(|| KinematicsError::InvalidModel("zero joint axis".into()))?;
        if !(limits.0 <= limits.1) {
            return Err(KinematicsError::InvalidModel(format!(
                "joint limits [{}, {}] are inverted",
                limits.0, limits.1
            )));
        }
        Ok(JointSpec {
            axis,
            origin,
            limits,
        })
    }

    fn motion(&self, q: f64) -> Isometry3<f64> {
        self.origin * UnitQuaternion::from_axis_angle(&self.axis, q)
    }
}

/// Collision geometry expressed in a joint frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalShape {
    Sphere {
        center: Point3<f64>,
        radius: f64,
    },
    Capsule {
        p0: Point3<f64>,
        p1: Point3<f64>,
        radius: f64,
    },
}

impl LocalShape {
    fn radius(&self) -> f64 {
        match *self {
            LocalShape::Sphere { radius, .. } | LocalShape::Capsule { radius, .. } => radius,
        }
    }

    fn max_extent(&self) -> f64 {
        match *self {
            LocalShape::Sphere { center, radius } => center.coords.norm() + radius,
            LocalShape::Capsule { p0, p1, radius } => {
                p0.coords.norm().max(p1.coords.norm()) + radius
            }
        }
    }

    fn place(&self, frame: &Isometry3<f64>) -> Shape {
        match *self {
            LocalShape::Sphere { center, radius } => Shape::Sphere {
                center: frame * center,
                radius,
            },
            LocalShape::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: frame * p0,
                p1: frame * p1,
                radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkGeometry {
    /// Index of the joint whose (post-rotation) frame carries this shape.
    pub joint: usize,
    pub shape: LocalShape,
}

/// Joint configuration of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub group: GroupId,
    pub positions: Vec<f64>,
}

impl JointState {
    pub fn new(group: impl Into<GroupId>, positions: Vec<f64>) -> Self {
        JointState {
            group: group.into(),
            positions,
        }
    }
}

impl From<String> for GroupId {
    fn from(s: String) -> Self {
        GroupId(s)
    }
}

#[derive(Debug, Clone)]
pub struct RobotModel {
    group: GroupId,
    base: Isometry3<f64>,
    joints: Vec<JointSpec>,
    links: Vec<LinkGeometry>,
    allowed_pairs: BTreeSet<(usize, usize)>,
    velocity_limits: Vec<f64>,
    speed_bound: f64,
}

impl RobotModel {
    /// Builds a model. Adjacent links are always added to the allowed pairs;
    /// `extra_allowed` can exempt further link pairs from self-collision.
    pub fn new(
        group: impl Into<GroupId>,
        base: Isometry3<f64>,
        joints: Vec<JointSpec>,
        links: Vec<LinkGeometry>,
        velocity_limits: Vec<f64>,
        extra_allowed: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, KinematicsError> {
        let group = group.into();
        if joints.is_empty() {
            return Err(KinematicsError::InvalidModel("model has no joints".into()));
        }
        if velocity_limits.len() != joints.len() {
            return Err(KinematicsError::InvalidModel(format!(
                "{} velocity limits for {} joints",
                velocity_limits.len(),
                joints.len()
            )));
        }
        if let Some(v) = velocity_limits.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(KinematicsError::InvalidModel(format!(
                "velocity limit {v} is not positive"
            )));
        }
        for link in &links {
            if link.joint >= joints.len() {
                return Err(KinematicsError::InvalidModel(format!(
                    "link references joint {} of {}",
                    link.joint,
                    joints.len()
                )));
            }
            if !(link.shape.radius() > 0.0) {
                return Err(KinematicsError::InvalidModel(
                    "link radius must be positive".into(),
                ));
            }
        }

        let mut allowed_pairs = adjacent_pairs(&links);
        for (a, b) in extra_allowed {
            if a >= links.len() || b >= links.len() {
                return Err(KinematicsError::InvalidModel(format!(
                    "allowed pair ({a}, {b}) references a missing link"
                )));
            }
            if a != b {
                allowed_pairs.insert((a.min(b), a.max(b)));
            }
        }

        let speed_bound = speed_bound(&joints, &links, &velocity_limits);
        Ok(RobotModel {
            group,
            base,
            joints,
            links,
            allowed_pairs,
            velocity_limits,
            speed_bound,
        })
    }

    pub fn group(&self) -> &GroupId {
        &self.group
    }

    pub fn base(&self) -> &Isometry3<f64> {
        &self.base
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn links(&self) -> &[LinkGeometry] {
        &self.links
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn velocity_limits(&self) -> &[f64] {
        &self.velocity_limits
    }

    pub fn allowed_pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.allowed_pairs
    }

    pub fn is_allowed(&self, a: usize, b: usize) -> bool {
        self.allowed_pairs.contains(&(a.min(b), a.max(b)))
    }

    /// Upper bound on the speed of any point of any collision primitive
    /// while every joint moves within its velocity limit.
    pub fn max_cartesian_speed_bound(&self) -> f64 {
        self.speed_bound
    }

    fn check_dimension(&self, q: &JointState) -> Result<(), KinematicsError> {
        if q.group != self.group {
            return Err(KinematicsError::GroupMismatch {
                expected: self.group.clone(),
                found: q.group.clone(),
            });
        }
        if q.positions.len() != self.joints.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.joints.len(),
                found: q.positions.len(),
            });
        }
        Ok(())
    }

    /// True iff every coordinate lies in its closed limit interval.
    pub fn within_limits(&self, q: &JointState) -> Result<bool, KinematicsError> {
        self.check_dimension(q)?;
        Ok(self.first_limit_violation(&q.positions).is_none())
    }

    fn first_limit_violation(&self, positions: &[f64]) -> Option<KinematicsError> {
        self.joints
            .iter()
            .zip(positions)
            .enumerate()
            .find(|(_, (j, &v))| !(v >= j.limits.0 && v <= j.limits.1))
            .map(|(joint, (j, &value))| KinematicsError::JointLimitViolation {
                joint,
                value,
                lo: j.limits.0,
                hi: j.limits.1,
            })
    }

    /// World frame of every joint after applying its rotation.
    pub fn joint_frames(&self, q: &JointState) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
        self.check_dimension(q)?;
        if let Some(err) = self.first_limit_violation(&q.positions) {
            return Err(err);
        }
        let mut frames = Vec::with_capacity(self.joints.len());
        let mut current = self.base;
        for (joint, &angle) in self.joints.iter().zip(&q.positions) {
            current *= joint.motion(angle);
            frames.push(current);
        }
        Ok(frames)
    }

    /// World-frame placement of every link primitive, in link order.
    pub fn forward_kinematics(
        &self,
        q: &JointState,
    ) -> Result<Vec<PlacedPrimitive>, KinematicsError> {
        let frames = self.joint_frames(q)?;
        Ok(self
            .links
            .iter()
            .enumerate()
            .map(|(i, link)| PlacedPrimitive {
                shape: link.shape.place(&frames[link.joint]),
                owner: Owner::Link {
                    group: self.group.clone(),
                    link: i,
                },
            })
            .collect())
    }
}

/// Links sharing a joint, and each link with the links on the closest
/// lower joint that carries geometry.
fn adjacent_pairs(links: &[LinkGeometry]) -> BTreeSet<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for (a, la) in links.iter().enumerate() {
        let parent_joint = links
            .iter()
            .map(|l| l.joint)
            .filter(|&j| j < la.joint)
            .max();
        for (b, lb) in links.iter().enumerate() {
            if a == b {
                continue;
            }
            if lb.joint == la.joint || Some(lb.joint) == parent_joint {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    pairs
}

/// Sum over joints of (velocity limit x reach), where reach bounds the
/// distance from the joint's rotation center to any distal primitive point.
fn speed_bound(joints: &[JointSpec], links: &[LinkGeometry], limits: &[f64]) -> f64 {
    let offsets: Vec<f64> = joints.iter().map(|j| j.origin.translation.vector.norm()).collect();
    (0..joints.len())
        .map(|j| {
            let reach = links
                .iter()
                .filter(|l| l.joint >= j)
                .map(|l| offsets[j + 1..=l.joint].iter().sum::<f64>() + l.shape.max_extent())
                .fold(0.0, f64::max);
            limits[j] * reach
        })
        .sum()
}
