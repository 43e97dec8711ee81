//! Drives a scenario through the executor and re-checks the executed motion.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::collision::{composite_state_check, Verdict};
use crate::executor::{
    AdmissionMode, Event, EventKind, ExecStatus, Executor, ExecutorConfig, MotionHistory,
};
use crate::geometry::Owner;
use crate::kinematics::JointState;
use crate::trajectory::TrajectoryId;

use super::metrics::Metrics;
use super::planner::plan_joint_line;
use super::scenario::Scenario;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Async,
    /// One trajectory at a time, as a single-trajectory execution manager
    /// would run the same workload.
    Sync,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Async => "async",
            Mode::Sync => "sync",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "async" => Ok(Mode::Async),
            "sync" => Ok(Mode::Sync),
            other => Err(format!("unknown mode {other:?}, expected async or sync")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub mode: Mode,
    pub metrics: Metrics,
    pub events: Vec<Event>,
    pub statuses: BTreeMap<TrajectoryId, ExecStatus>,
    pub history: MotionHistory,
    pub final_clock: f64,
}

impl RunOutcome {
    /// The event log, one tab-separated line per event.
    pub fn event_log(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    /// 3 after a collision halt, 2 if anything else aborted, 0 otherwise.
    pub fn exit_code(&self) -> i32 {
        let has = |k: EventKind| self.events.iter().any(|e| e.kind == k);
        if has(EventKind::CollisionHalt) {
            3
        } else if has(EventKind::TimeoutAbort)
            || has(EventKind::StartMismatchAbort)
            || has(EventKind::Cancelled)
        {
            2
        } else {
            0
        }
    }
}

pub fn executor_config(scenario: &Scenario, mode: Mode) -> ExecutorConfig {
    let p = &scenario.params;
    ExecutorConfig {
        tick_length: p.tick,
        monitor_period: p.monitor_period,
        params: p.check_params(),
        mode: match mode {
            Mode::Async => AdmissionMode::Async,
            Mode::Sync => AdmissionMode::Serialized,
        },
        check_static: p.check_static,
    }
}

/// Submits each task at its submit time, planned from the goal of the
/// group's previous task, and ticks until every trajectory is terminal.
pub fn run(scenario: &Scenario, mode: Mode) -> Result<RunOutcome, HarnessError> {
    scenario.validate()?;
    let scene = scenario.scene()?;
    let config = executor_config(scenario, mode);
    let tick = config.tick_length;
    let mut exec = Executor::new(scene.clone(), config)?;

    let mut order: Vec<usize> = (0..scenario.tasks.len()).collect();
    order.sort_by(|&a, &b| {
        scenario.tasks[a]
            .submit_time
            .total_cmp(&scenario.tasks[b].submit_time)
    });
    let mut expected: BTreeMap<_, JointState> = scene.idle_postures().clone();
    let mut handles = Vec::with_capacity(order.len());
    // every trajectory is terminal by submission + timeout + duration + 1 tick
    let mut latest_end: f64 = 0.0;
    let mut next = 0;

    loop {
        while next < order.len()
            && scenario.tasks[order[next]].submit_time <= exec.clock() + 1e-9
        {
            let index = order[next];
            let task = &scenario.tasks[index];
            let model = scene.robot(&task.group)?;
            let goal = JointState::new(task.group.clone(), task.goal.clone());
            let start = &expected[&task.group];
            let traj = plan_joint_line(TrajectoryId(index as u64 + 1), model, start, &goal)?;
            let timeout = scenario.timeout_of(task);
            latest_end = latest_end.max(exec.clock() + timeout + traj.duration());
            handles.push(exec.submit(traj, timeout)?);
            expected.insert(task.group.clone(), goal);
            next += 1;
        }
        if next == order.len() {
            if exec.is_quiescent() {
                break;
            }
            let limit = (latest_end / tick).ceil() as u64 + 10;
            if exec.ticks() > limit {
                return Err(HarnessError::DidNotSettle(limit));
            }
        }
        exec.tick();
    }

    let statuses = handles
        .iter()
        .map(|h| Ok((h.id, exec.status(h)?)))
        .collect::<Result<_, HarnessError>>()?;
    let events = exec.events().to_vec();
    Ok(RunOutcome {
        mode,
        metrics: Metrics::from_events(mode.as_str(), &events),
        events,
        statuses,
        history: exec.history().clone(),
        final_clock: exec.clock(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SafetyReport {
    /// Smallest clearance over all samples, with where and when it occurred.
    pub min_clearance: f64,
    pub at: f64,
    pub witness: Option<(Owner, Owner)>,
    pub samples: usize,
}

impl SafetyReport {
    pub fn is_safe(&self) -> bool {
        self.min_clearance > 0.0
    }
}

/// Replays the executed motion at `step` from time 0 to the end of the run
/// and measures true clearance between all bodies at every sample.
pub fn verify_safety(
    scenario: &Scenario,
    outcome: &RunOutcome,
    step: f64,
) -> Result<SafetyReport, HarnessError> {
    let scene = scenario.scene()?;
    let end = outcome.final_clock.max(outcome.history.end_time());
    let mut report = SafetyReport {
        min_clearance: f64::INFINITY,
        at: 0.0,
        witness: None,
        samples: 0,
    };
    for t in crate::trajectory::sample_times(step, end)
        .map_err(|e| HarnessError::ScenarioInvalid(e.to_string()))?
    {
        let states = outcome.history.states_at(t);
        let check = composite_state_check(&states, &scene, 0.0)?;
        report.samples += 1;
        if check.min_clearance_seen < report.min_clearance {
            report.min_clearance = check.min_clearance_seen;
            report.at = t;
            report.witness = match check.verdict {
                Verdict::Colliding { witness, .. } => Some(witness),
                Verdict::Clear => None,
            };
        }
    }
    Ok(report)
}
