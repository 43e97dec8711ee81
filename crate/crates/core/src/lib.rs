//! Asynchronous trajectory execution for several robot arms sharing a
//! workspace.
//!
//! New trajectories enter a continuous queue and are admitted only if a
//! time-discretized check against every running trajectory, the static
//! scene and the idle arms finds no clearance at or below the margin.
//! Trajectories that fail wait in a backlog until a blocker terminates or
//! their timeout expires. A periodic monitor checks the consolidated state
//! of all arms and halts everything on a violation.

pub mod collision;
pub mod executor;
pub mod geometry;
pub mod harness;
pub mod kinematics;
pub mod trajectory;

pub use collision::{CheckParams, CollisionReport, RunningRecord, Scene, Verdict};
pub use executor::{
    AdmissionMode, Blocker, Event, EventKind, ExecHandle, ExecStatus, Executor, ExecutorConfig,
};
pub use kinematics::{GroupId, JointState, RobotModel};
pub use trajectory::{JointTrajectory, TrajectoryId, Waypoint};
