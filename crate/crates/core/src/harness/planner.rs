use crate::kinematics::{JointState, RobotModel};
use crate::trajectory::{JointTrajectory, TrajectoryId, Waypoint};

use super::HarnessError;

/// Straight joint-space segment from `start` to `goal`, timed so the
/// binding joint moves at exactly its velocity limit and every other joint
/// proportionally slower. Identical endpoints give a single waypoint.
pub fn plan_joint_line(
    id: TrajectoryId,
    model: &RobotModel,
    start: &JointState,
    goal: &JointState,
) -> Result<JointTrajectory, HarnessError> {
    for q in [start, goal] {
        if !model.within_limits(q)? {
            // joint_frames reports which joint is out of range
            model.joint_frames(q)?;
        }
    }
    let duration = start
        .positions
        .iter()
        .zip(&goal.positions)
        .zip(model.velocity_limits())
        .map(|((a, b), v)| (b - a).abs() / v)
        .fold(0.0, f64::max);

    let mut waypoints = vec![Waypoint::new(0.0, start.positions.clone())];
    if duration > 0.0 {
        waypoints.push(Waypoint::new(duration, goal.positions.clone()));
    }
    Ok(JointTrajectory::new(id, model.group().clone(), waypoints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::fixtures::planar_arm;
    use crate::kinematics::KinematicsError;
    use nalgebra::Isometry3;

    #[test]
    fn zero_motion_is_a_hold() {
        let m = planar_arm("a", Isometry3::identity(), &[1.0, 1.0], 0.1, 1.0);
        let q = JointState::new("a", vec![0.2, 0.3]);
        let t = plan_joint_line(TrajectoryId(1), &m, &q, &q).unwrap();
        assert_eq!(t.waypoints.len(), 1);
        assert_eq!(t.duration(), 0.0);
    }

    #[test]
    fn single_joint_duration() {
        let m = planar_arm("a", Isometry3::identity(), &[1.0], 0.1, 1.0);
        let t = plan_joint_line(
            TrajectoryId(1),
            &m,
            &JointState::new("a", vec![-1.0]),
            &JointState::new("a", vec![1.0]),
        )
        .unwrap();
        assert_eq!(t.duration(), 2.0);
    }

    #[test]
    fn binding_joint_sets_the_pace() {
        let m = planar_arm("a", Isometry3::identity(), &[1.0, 1.0], 0.1, 1.0);
        let t = plan_joint_line(
            TrajectoryId(1),
            &m,
            &JointState::new("a", vec![0.0, 0.0]),
            &JointState::new("a", vec![2.0, 1.0]),
        )
        .unwrap();
        assert_eq!(t.duration(), 2.0);
        assert_eq!(t.positions_at(1.0).unwrap(), vec![1.0, 0.5]);
        assert_eq!(t.validate(&m), Ok(()));
        assert_eq!(t.first_positions().unwrap(), &[0.0, 0.0]);
        assert_eq!(t.final_positions().unwrap(), &[2.0, 1.0]);
    }

    #[test]
    fn out_of_limit_goal_is_rejected() {
        let m = planar_arm("a", Isometry3::identity(), &[1.0], 0.1, 1.0);
        let err = plan_joint_line(
            TrajectoryId(1),
            &m,
            &JointState::new("a", vec![0.0]),
            &JointState::new("a", vec![4.0]),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            HarnessError::LimitViolation(KinematicsError::JointLimitViolation { joint: 0, .. })
        ));
    }
}
