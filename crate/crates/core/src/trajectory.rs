//! Timed joint-space trajectories: piecewise-linear interpolation with the
//! final waypoint held after the end, and fixed-step discretization.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{GroupId, JointState, RobotModel};

/// Relative slack allowed on per-segment joint speeds.
const SPEED_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum TrajectoryError {
    #[error("negative trajectory time {0}")]
    NegativeTime(f64),
    #[error("discretization step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("negative horizon {0}")]
    NegativeHorizon(f64),
    #[error("trajectory has no waypoints")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrajectoryId(pub u64);

impl fmt::Display for TrajectoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub time_from_start: f64,
    pub positions: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
}

impl Waypoint {
    pub fn new(time_from_start: f64, positions: Vec<f64>) -> Self {
        Waypoint {
            time_from_start,
            positions,
            velocities: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedState {
    pub time: f64,
    pub state: JointState,
}

/// Reasons a trajectory cannot be executed on a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    GroupMismatch { expected: GroupId, found: GroupId },
    FirstTimeNotZero { time: f64 },
    NonMonotonicTime { index: usize },
    DimensionMismatch { index: usize, expected: usize, found: usize },
    JointLimit { index: usize, joint: usize, value: f64 },
    VelocityLimit { segment: usize, joint: usize, speed: f64, limit: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "no waypoints"),
            Violation::GroupMismatch { expected, found } => {
                write!(f, "trajectory for group {found} checked against {expected}")
            }
            Violation::FirstTimeNotZero { time } => write!(f, "first waypoint at t={time}"),
            Violation::NonMonotonicTime { index } => {
                write!(f, "waypoint {index} does not advance time")
            }
            Violation::DimensionMismatch {
                index,
                expected,
                found,
            } => write!(f, "waypoint {index} has {found} joints, expected {expected}"),
            Violation::JointLimit {
                index,
                joint,
                value,
            } => write!(f, "waypoint {index} joint {joint} at {value} outside limits"),
            Violation::VelocityLimit {
                segment,
                joint,
                speed,
                limit,
            } => write!(
                f,
                "segment {segment} joint {joint} moves at {speed} rad/s over limit {limit}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub id: TrajectoryId,
    pub group: GroupId,
    pub waypoints: Vec<Waypoint>,
}

impl JointTrajectory {
    pub fn new(id: TrajectoryId, group: impl Into<GroupId>, waypoints: Vec<Waypoint>) -> Self {
        JointTrajectory {
            id,
            group: group.into(),
            waypoints,
        }
    }

    /// Time of the last waypoint.
    pub fn duration(&self) -> f64 {
        self.waypoints.last().map_or(0.0, |w| w.time_from_start)
    }

    pub fn first_positions(&self) -> Option<&[f64]> {
        self.waypoints.first().map(|w| w.positions.as_slice())
    }

    pub fn final_positions(&self) -> Option<&[f64]> {
        self.waypoints.last().map(|w| w.positions.as_slice())
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self, model: &RobotModel) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        if &self.group != model.group() {
            violations.push(Violation::GroupMismatch {
                expected: model.group().clone(),
                found: self.group.clone(),
            });
        }
        let Some(first) = self.waypoints.first() else {
            violations.push(Violation::Empty);
            return Err(violations);
        };
        if first.time_from_start != 0.0 {
            violations.push(Violation::FirstTimeNotZero {
                time: first.time_from_start,
            });
        }

        let dof = model.dof();
        for (index, w) in self.waypoints.iter().enumerate() {
            if w.positions.len() != dof {
                violations.push(Violation::DimensionMismatch {
                    index,
                    expected: dof,
                    found: w.positions.len(),
                });
                continue;
            }
            for (joint, (spec, &value)) in model.joints().iter().zip(&w.positions).enumerate() {
                if !(value >= spec.limits.0 && value <= spec.limits.1) {
                    violations.push(Violation::JointLimit {
                        index,
                        joint,
                        value,
                    });
                }
            }
        }

        for (segment, pair) in self.waypoints.windows(2).enumerate() {
            let dt = pair[1].time_from_start - pair[0].time_from_start;
            if !(dt > 0.0) {
                violations.push(Violation::NonMonotonicTime { index: segment + 1 });
                continue;
            }
            if pair[0].positions.len() != dof || pair[1].positions.len() != dof {
                continue;
            }
            for (joint, &limit) in model.velocity_limits().iter().enumerate() {
                let speed = (pair[1].positions[joint] - pair[0].positions[joint]).abs() / dt;
                if speed > limit * (1.0 + SPEED_TOLERANCE) {
                    violations.push(Violation::VelocityLimit {
                        segment,
                        joint,
                        speed,
                        limit,
                    });
                }
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }

    /// Linear interpolation between the bracketing waypoints; the final
    /// waypoint is held for any `t` past the end.
    pub fn state_at(&self, t: f64) -> Result<JointState, TrajectoryError> {
        Ok(JointState {
            group: self.group.clone(),
            positions: self.positions_at(t)?,
        })
    }

    pub fn positions_at(&self, t: f64) -> Result<Vec<f64>, TrajectoryError> {
        if t < 0.0 || t.is_nan() {
            return Err(TrajectoryError::NegativeTime(t));
        }
        let last = self.waypoints.last().ok_or(TrajectoryError::Empty)?;
        if t >= last.time_from_start {
            return Ok(last.positions.clone());
        }
        // Segment with t_i <= t < t_{i+1}; waypoint times map to s = 0 exactly.
        let next = self.waypoints.partition_point(|w| w.time_from_start <= t);
        if next == 0 {
            return Ok(self.waypoints[0].positions.clone());
        }
        let (a, b) = (&self.waypoints[next - 1], &self.waypoints[next]);
        let s = (t - a.time_from_start) / (b.time_from_start - a.time_from_start);
        Ok(a
            .positions
            .iter()
            .zip(&b.positions)
            .map(|(x, y)| x + (y - x) * s)
            .collect())
    }

    /// Samples at `0, dt, 2dt, ...` below `horizon`, then `horizon` itself.
    pub fn discretize(&self, dt: f64, horizon: f64) -> Result<Vec<TimedState>, TrajectoryError> {
        sample_times(dt, horizon)?
            .into_iter()
            .map(|time| {
                Ok(TimedState {
                    time,
                    state: self.state_at(time)?,
                })
            })
            .collect()
    }
}

/// Sorted, duplicate-free sample times covering `[0, horizon]` with gaps of
/// at most `dt`; always ends at `horizon`.
pub fn sample_times(dt: f64, horizon: f64) -> Result<Vec<f64>, TrajectoryError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(TrajectoryError::NonPositiveStep(dt));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(TrajectoryError::NegativeHorizon(horizon));
    }
    let mut times: Vec<f64> = (0u64..)
        .map(|k| k as f64 * dt)
        .take_while(|&t| t < horizon)
        .collect();
    times.push(horizon);
    Ok(times)
}
