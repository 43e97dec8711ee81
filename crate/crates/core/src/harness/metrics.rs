//! Run metrics, computed purely from the event log.

use std::collections::BTreeMap;
use std::path::Path;

use crate::executor::{Event, EventKind};
use crate::kinematics::GroupId;
use crate::trajectory::TrajectoryId;

use super::HarnessError;

pub const CSV_HEADER: [&str; 9] = [
    "mode",
    "makespan_s",
    "mean_wait_s",
    "backlog_entries",
    "timeout_aborts",
    "collision_halts",
    "pairwise_checks",
    "state_evaluations",
    "overhead_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub mode: String,
    /// First submission to last completion.
    pub makespan: f64,
    /// Submission-to-admission delay of every admitted trajectory.
    pub waits: BTreeMap<TrajectoryId, f64>,
    pub backlog_entries: u64,
    pub timeout_aborts: u64,
    pub collision_halts: u64,
    pub pairwise_checks: u64,
    pub state_evaluations: u64,
    /// Makespan minus the busiest group's summed completed durations.
    pub overhead: f64,
}

fn field<T: std::str::FromStr>(e: &Event, key: &str) -> Option<T> {
    e.field(key).and_then(|v| v.parse().ok())
}

impl Metrics {
    pub fn from_events(mode: &str, events: &[Event]) -> Self {
        let mut submitted: BTreeMap<TrajectoryId, (f64, GroupId, f64)> = BTreeMap::new();
        let mut waits = BTreeMap::new();
        let mut busy: BTreeMap<GroupId, f64> = BTreeMap::new();
        let mut first_submit: Option<f64> = None;
        let mut last_completion: Option<f64> = None;
        let mut m = Metrics {
            mode: mode.to_owned(),
            makespan: 0.0,
            waits: BTreeMap::new(),
            backlog_entries: 0,
            timeout_aborts: 0,
            collision_halts: 0,
            pairwise_checks: 0,
            state_evaluations: 0,
            overhead: 0.0,
        };

        for e in events {
            match e.kind {
                EventKind::Submitted => {
                    first_submit = Some(first_submit.map_or(e.clock, |f| f.min(e.clock)));
                    let group = GroupId::new(e.field("group").unwrap_or_default());
                    submitted.insert(
                        e.trajectory,
                        (e.clock, group, field(e, "duration").unwrap_or(0.0)),
                    );
                }
                EventKind::Admitted | EventKind::Backlogged => {
                    m.pairwise_checks += field::<u64>(e, "checks").unwrap_or(0);
                    m.state_evaluations += field::<u64>(e, "states").unwrap_or(0);
                    if e.kind == EventKind::Admitted {
                        if let Some((at, _, _)) = submitted.get(&e.trajectory) {
                            waits.insert(e.trajectory, e.clock - at);
                        }
                    } else {
                        m.backlog_entries += 1;
                    }
                }
                EventKind::Completed => {
                    last_completion = Some(last_completion.map_or(e.clock, |l| l.max(e.clock)));
                    if let Some((_, group, duration)) = submitted.get(&e.trajectory) {
                        *busy.entry(group.clone()).or_default() += duration;
                    }
                }
                EventKind::TimeoutAbort => m.timeout_aborts += 1,
                EventKind::CollisionHalt => m.collision_halts += 1,
                EventKind::Requeued | EventKind::Cancelled | EventKind::StartMismatchAbort => {}
            }
        }

        if let (Some(first), Some(last)) = (first_submit, last_completion) {
            m.makespan = last - first;
            let bound = busy.values().copied().fold(0.0, f64::max);
            m.overhead = m.makespan - bound;
        }
        m.waits = waits;
        m
    }

    pub fn mean_wait(&self) -> f64 {
        if self.waits.is_empty() {
            0.0
        } else {
            self.waits.values().sum::<f64>() / self.waits.len() as f64
        }
    }

    pub fn csv_row(&self) -> [String; 9] {
        [
            self.mode.clone(),
            format!("{:.6}", self.makespan),
            format!("{:.6}", self.mean_wait()),
            self.backlog_entries.to_string(),
            self.timeout_aborts.to_string(),
            self.collision_halts.to_string(),
            self.pairwise_checks.to_string(),
            self.state_evaluations.to_string(),
            format!("{:.6}", self.overhead),
        ]
    }

    /// Header plus one row, exactly as written by [`write_metrics`].
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        w.write_record(self.csv_row())?;
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn write_metrics(metrics: &Metrics, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    std::fs::write(path, metrics.to_csv()?)?;
    Ok(())
}
