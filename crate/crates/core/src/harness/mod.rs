//! Scenario files, the straight-line joint planner, the async/sync run
//! driver with post-hoc safety verification, and run metrics.

pub mod metrics;
pub mod planner;
pub mod run;
pub mod scenario;

pub use metrics::{write_metrics, Metrics};
pub use planner::plan_joint_line;
pub use run::{run, verify_safety, Mode, RunOutcome, SafetyReport};
pub use scenario::{Scenario, ScenarioParams, Task};

use thiserror::Error;

use crate::collision::CollisionError;
use crate::executor::ExecError;
use crate::kinematics::KinematicsError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    ScenarioInvalid(String),
    #[error("joint limit violation: {0}")]
    LimitViolation(#[from] KinematicsError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("malformed scenario json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("run did not settle within {0} ticks")]
    DidNotSettle(u64),
}
