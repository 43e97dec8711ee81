//! Trajectory execution manager: continuous queue, collision-gated
//! admission, backlog with blockers and timeouts, ideal per-group
//! controllers, and a periodic consolidated-state monitor, all driven by a
//! fixed-tick simulated clock.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use log::{debug, warn};
use thiserror::Error;

use crate::collision::{
    composite_state_check, required_margin, trajectory_vs_obstacles, trajectory_vs_posture,
    trajectory_vs_running, CheckParams, CollisionError, CollisionReport, RunningRecord, Scene,
};
use crate::geometry::Owner;
use crate::kinematics::{GroupId, JointState};
use crate::trajectory::{JointTrajectory, TrajectoryId, Violation};

/// Slack for comparing simulated times built from tick counts.
const TIME_EPS: f64 = 1e-9;
/// Largest per-joint gap tolerated between a trajectory's first waypoint
/// and the posture its group holds at admission.
const START_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("trajectory failed validation: {}", join_violations(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("unknown handle {0}")]
    UnknownHandle(TrajectoryId),
    #[error("trajectory id {0} was already submitted")]
    DuplicateId(TrajectoryId),
    #[error("timeout must be positive and finite, got {0}")]
    InvalidTimeout(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// How admission treats the running set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmissionMode {
    /// Admit whenever the collision checks pass.
    Async,
    /// Admit only when nothing is running (one trajectory at a time).
    Serialized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecutorConfig {
    pub tick_length: f64,
    /// Ticks between consolidated-state checks; 0 disables the monitor.
    pub monitor_period: u64,
    pub params: CheckParams,
    pub mode: AdmissionMode,
    /// Also check candidates against static obstacles and idle arms.
    pub check_static: bool,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        ExecutorConfig {
            tick_length: 0.01,
            monitor_period: 5,
            params: CheckParams::default(),
            mode: AdmissionMode::Async,
            check_static: true,
        }
    }
}

impl ExecutorConfig {
    /// Clearance at or below which the monitor halts execution. Admission
    /// keeps sampled clearance above the margin, and the sound-margin rule
    /// bounds the dip between samples by half of it.
    pub fn monitor_margin(&self) -> f64 {
        self.params.margin / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExecHandle {
    pub id: TrajectoryId,
    pub group: GroupId,
}

/// Why a backlogged trajectory cannot start yet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Blocker {
    /// A running or earlier-queued trajectory.
    Trajectory(TrajectoryId),
    /// An idle arm parked in the way; cleared when that arm next moves.
    IdleGroup(GroupId),
    /// A static obstacle; never clears.
    Static(usize),
}

impl fmt::Display for Blocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Blocker::Trajectory(id) => write!(f, "{id}"),
            Blocker::IdleGroup(g) => write!(f, "idle:{g}"),
            Blocker::Static(i) => write!(f, "static:{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecStatus {
    Pending,
    Running {
        start: f64,
    },
    Backlogged {
        blockers: BTreeSet<Blocker>,
        deadline: f64,
    },
    Succeeded {
        finish: f64,
    },
    AbortedTimeout {
        at: f64,
    },
    AbortedCollision {
        at: f64,
        witness: (Owner, Owner),
    },
    /// The group no longer holds the posture the trajectory starts from.
    AbortedStartMismatch {
        at: f64,
    },
    Cancelled {
        at: f64,
    },
}

impl ExecStatus {
    pub fn is_terminal(&self) -> bool {
        !matches!(
            self,
            ExecStatus::Pending | ExecStatus::Running { .. } | ExecStatus::Backlogged { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Submitted,
    Admitted,
    Backlogged,
    Requeued,
    TimeoutAbort,
    CollisionHalt,
    Completed,
    Cancelled,
    StartMismatchAbort,
}

impl EventKind {
    pub const ALL: [EventKind; 9] = [
        EventKind::Submitted,
        EventKind::Admitted,
        EventKind::Backlogged,
        EventKind::Requeued,
        EventKind::TimeoutAbort,
        EventKind::CollisionHalt,
        EventKind::Completed,
        EventKind::Cancelled,
        EventKind::StartMismatchAbort,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Submitted => "SUBMITTED",
            EventKind::Admitted => "ADMITTED",
            EventKind::Backlogged => "BACKLOGGED",
            EventKind::Requeued => "REQUEUED",
            EventKind::TimeoutAbort => "TIMEOUT_ABORT",
            EventKind::CollisionHalt => "COLLISION_HALT",
            EventKind::Completed => "COMPLETED",
            EventKind::Cancelled => "CANCELLED",
            EventKind::StartMismatchAbort => "START_MISMATCH_ABORT",
        }
    }

    pub fn parse(s: &str) -> Option<EventKind> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of the execution log. `detail` is a space-separated list of
/// `key=value` fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub clock: f64,
    pub kind: EventKind,
    pub trajectory: TrajectoryId,
    pub detail: String,
}

impl Event {
    /// Value of `key` in the detail field.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.detail
            .split(' ')
            .filter_map(|kv| kv.split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v)
    }

    /// Inverse of the `Display` form.
    pub fn parse_line(line: &str) -> Option<Event> {
        let mut parts = line.splitn(4, '\t');
        let clock = parts.next()?.parse().ok()?;
        let kind = EventKind::parse(parts.next()?)?;
        let trajectory = TrajectoryId(parts.next()?.parse().ok()?);
        let detail = parts.next().unwrap_or("").to_owned();
        Some(Event {
            clock,
            kind,
            trajectory,
            detail,
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.6}\t{}\t{}\t{}",
            self.clock, self.kind, self.trajectory, self.detail
        )
    }
}

/// One stretch of motion of a group, from admission until completion, halt
/// or cancellation (`stop`, absent while still running).
#[derive(Debug, Clone)]
pub struct MotionSegment {
    pub trajectory: Arc<JointTrajectory>,
    pub start: f64,
    pub stop: Option<f64>,
}

/// Everything needed to reconstruct where every arm was at any instant.
#[derive(Debug, Clone)]
pub struct MotionHistory {
    pub initial: BTreeMap<GroupId, JointState>,
    pub segments: Vec<MotionSegment>,
}

impl MotionHistory {
    /// Posture of every group at absolute time `t`.
    pub fn states_at(&self, t: f64) -> BTreeMap<GroupId, JointState> {
        let mut states = self.initial.clone();
        // segments of one group never overlap and are stored in start order
        for seg in self.segments.iter().filter(|s| s.start <= t) {
            let until = seg.stop.map_or(t, |stop| t.min(stop));
            let state = seg
                .trajectory
                .state_at((until - seg.start).max(0.0))
                .expect("non-negative time on a validated trajectory");
            states.insert(seg.trajectory.group.clone(), state);
        }
        states
    }

    pub fn end_time(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.stop.unwrap_or(s.start + s.trajectory.duration()))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckCounters {
    /// Candidate-versus-running trajectory checks.
    pub pairwise_checks: u64,
    /// Discrete states evaluated during admission checks.
    pub state_evaluations: u64,
    pub monitor_checks: u64,
}

#[derive(Debug)]
struct Entry {
    trajectory: Arc<JointTrajectory>,
    seq: u64,
    deadline: f64,
    status: ExecStatus,
}

/// The execution manager. Callers needing concurrent access wrap it in a
/// mutex; every method takes `&mut self` so submissions, cancellations and
/// ticks are serialized in call order.
#[derive(Debug)]
pub struct Executor {
    scene: Scene,
    config: ExecutorConfig,
    ticks: u64,
    next_seq: u64,
    entries: BTreeMap<TrajectoryId, Entry>,
    running: BTreeMap<GroupId, RunningRecord>,
    queue: VecDeque<TrajectoryId>,
    backlog: Vec<TrajectoryId>,
    events: Vec<Event>,
    history: MotionHistory,
    counters: CheckCounters,
}

fn fmt_time(t: f64) -> String {
    format!("{t:.6}")
}

impl Executor {
    pub fn new(scene: Scene, config: ExecutorConfig) -> Result<Self, ExecError> {
        config.params.validate()?;
        if !(config.tick_length > 0.0) || !config.tick_length.is_finite() {
            return Err(ExecError::InvalidConfig(format!(
                "tick length {} must be positive",
                config.tick_length
            )));
        }
        let bound = scene.max_speed_bound();
        let needed = required_margin(bound, config.params.dt);
        if config.params.is_sound_for(bound) {
            debug!(
                "speed bound {bound:.4} m/s, margin {} >= required {needed:.4}",
                config.params.margin
            );
        } else {
            warn!(
                "margin {} m is below 2 x {bound:.4} m/s x {} s = {needed:.4} m; \
                 collisions between checked time steps can go undetected",
                config.params.margin, config.params.dt
            );
        }
        let history = MotionHistory {
            initial: scene.idle_postures().clone(),
            segments: Vec::new(),
        };
        Ok(Executor {
            scene,
            config,
            ticks: 0,
            next_seq: 0,
            entries: BTreeMap::new(),
            running: BTreeMap::new(),
            queue: VecDeque::new(),
            backlog: Vec::new(),
            events: Vec::new(),
            history,
            counters: CheckCounters::default(),
        })
    }

    pub fn config(&self) -> &ExecutorConfig {
        &self.config
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn clock(&self) -> f64 {
        self.ticks as f64 * self.config.tick_length
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn history(&self) -> &MotionHistory {
        &self.history
    }

    pub fn counters(&self) -> CheckCounters {
        self.counters
    }

    pub fn running(&self) -> &BTreeMap<GroupId, RunningRecord> {
        &self.running
    }

    /// Ids of the backlog in insertion order.
    pub fn backlog(&self) -> &[TrajectoryId] {
        &self.backlog
    }

    /// True when nothing is pending, backlogged or running.
    pub fn is_quiescent(&self) -> bool {
        self.running.is_empty() && self.queue.is_empty() && self.backlog.is_empty()
    }

    /// Current joint state of every group.
    pub fn current_states(&self) -> BTreeMap<GroupId, JointState> {
        let now = self.clock();
        let mut states = self.scene.idle_postures().clone();
        for (group, rec) in &self.running {
            states.insert(group.clone(), state_of(rec, now));
        }
        states
    }

    pub fn submit(
        &mut self,
        trajectory: JointTrajectory,
        timeout: f64,
    ) -> Result<ExecHandle, ExecError> {
        if !(timeout > 0.0) || !timeout.is_finite() {
            return Err(ExecError::InvalidTimeout(timeout));
        }
        let model = self
            .scene
            .robot(&trajectory.group)
            .map_err(|_| ExecError::UnknownGroup(trajectory.group.clone()))?;
        trajectory.validate(model).map_err(ExecError::ValidationFailed)?;
        if self.entries.contains_key(&trajectory.id) {
            return Err(ExecError::DuplicateId(trajectory.id));
        }

        let now = self.clock();
        let deadline = now + timeout;
        let handle = ExecHandle {
            id: trajectory.id,
            group: trajectory.group.clone(),
        };
        self.log(
            now,
            EventKind::Submitted,
            handle.id,
            format!(
                "group={} duration={} deadline={}",
                handle.group,
                fmt_time(trajectory.duration()),
                fmt_time(deadline)
            ),
        );
        self.entries.insert(
            handle.id,
            Entry {
                trajectory: Arc::new(trajectory),
                seq: self.next_seq,
                deadline,
                status: ExecStatus::Pending,
            },
        );
        self.next_seq += 1;
        self.queue.push_back(handle.id);
        Ok(handle)
    }

    pub fn status(&self, handle: &ExecHandle) -> Result<ExecStatus, ExecError> {
        self.entries
            .get(&handle.id)
            .map(|e| e.status.clone())
            .ok_or(ExecError::UnknownHandle(handle.id))
    }

    /// Cancels a non-terminal trajectory. A running one stops where it is.
    pub fn cancel(&mut self, handle: &ExecHandle) -> Result<ExecStatus, ExecError> {
        let id = handle.id;
        let status = self.status(handle)?;
        let now = self.clock();
        let mut moved = Vec::new();
        match status {
            ExecStatus::Pending => self.queue.retain(|q| *q != id),
            ExecStatus::Backlogged { .. } => self.backlog.retain(|b| *b != id),
            ExecStatus::Running { .. } => {
                let group = self.entries[&id].trajectory.group.clone();
                self.freeze(&group, now);
                moved.push(group);
            }
            terminal => return Ok(terminal),
        }
        let cancelled = ExecStatus::Cancelled { at: now };
        self.set_status(id, cancelled.clone());
        self.log(now, EventKind::Cancelled, id, format!("group={}", handle.group));
        self.release(&[id], &moved, now);
        Ok(cancelled)
    }

    /// Advances the clock one tick: completions, backlog release, timeouts,
    /// queue drain, then the periodic monitor. Returns this tick's events.
    pub fn tick(&mut self) -> Vec<Event> {
        let first_event = self.events.len();
        self.ticks += 1;
        let now = self.clock();

        let done: Vec<GroupId> = self
            .running
            .iter()
            .filter(|(_, rec)| now - rec.start_time >= rec.trajectory.duration() - TIME_EPS)
            .map(|(g, _)| g.clone())
            .collect();
        let mut finished = Vec::with_capacity(done.len());
        for group in &done {
            let rec = self.running.remove(group).expect("listed as running");
            let id = rec.trajectory.id;
            self.scene
                .set_idle_posture(state_of(&rec, now))
                .expect("final waypoint of a validated trajectory");
            self.close_segment(id, now);
            self.set_status(id, ExecStatus::Succeeded { finish: now });
            self.log(
                now,
                EventKind::Completed,
                id,
                format!("group={group} start={}", fmt_time(rec.start_time)),
            );
            finished.push(id);
        }
        self.release(&finished, &done, now);

        let expired: Vec<TrajectoryId> = self
            .backlog
            .iter()
            .copied()
            .filter(|id| now >= self.entries[id].deadline - TIME_EPS)
            .collect();
        if !expired.is_empty() {
            self.backlog.retain(|id| !expired.contains(id));
            for &id in &expired {
                self.abort_timeout(id, now);
            }
            self.release(&expired, &[], now);
        }

        while let Some(id) = self.queue.pop_front() {
            self.try_admit(id, now);
        }

        if self.config.monitor_period > 0
            && self.ticks.is_multiple_of(self.config.monitor_period)
            && !self.running.is_empty()
        {
            self.monitor(now);
        }

        self.events[first_event..].to_vec()
    }

    /// Ticks until quiescent or `max_ticks` more ticks have elapsed. Returns
    /// whether the executor became quiescent.
    pub fn run_until_quiescent(&mut self, max_ticks: u64) -> bool {
        for _ in 0..max_ticks {
            if self.is_quiescent() {
                return true;
            }
            self.tick();
        }
        self.is_quiescent()
    }

    fn try_admit(&mut self, id: TrajectoryId, now: f64) {
        let (traj, seq, deadline) = {
            let e = &self.entries[&id];
            (Arc::clone(&e.trajectory), e.seq, e.deadline)
        };
        if now >= deadline - TIME_EPS {
            self.abort_timeout(id, now);
            self.release(&[id], &[], now);
            return;
        }

        // One controller per group: wait for the group's latest earlier
        // submission that has not terminated yet.
        let predecessor = self
            .entries
            .iter()
            .filter(|(_, e)| {
                e.seq < seq && e.trajectory.group == traj.group && !e.status.is_terminal()
            })
            .max_by_key(|(_, e)| e.seq)
            .map(|(pid, _)| *pid);
        if let Some(pred) = predecessor {
            self.to_backlog(id, BTreeSet::from([Blocker::Trajectory(pred)]), deadline, now, None);
            return;
        }

        if self.config.mode == AdmissionMode::Serialized && !self.running.is_empty() {
            let blockers = self
                .running
                .values()
                .map(|r| Blocker::Trajectory(r.trajectory.id))
                .collect();
            self.to_backlog(id, blockers, deadline, now, None);
            return;
        }

        let hold = self
            .scene
            .idle_posture(&traj.group)
            .expect("every group has a posture");
        let start = traj.first_positions().expect("validated trajectory");
        if hold
            .positions
            .iter()
            .zip(start)
            .any(|(a, b)| (a - b).abs() > START_TOLERANCE)
        {
            self.set_status(id, ExecStatus::AbortedStartMismatch { at: now });
            self.log(
                now,
                EventKind::StartMismatchAbort,
                id,
                format!("group={}", traj.group),
            );
            self.release(&[id], &[], now);
            return;
        }

        let mut blockers = BTreeSet::new();
        let mut stats = AdmissionStats::default();
        let params = self.config.params;
        for rec in self.running.values() {
            let report = trajectory_vs_running(&traj, rec, now, &params, &self.scene)
                .expect("validated trajectories in a consistent scene");
            stats.add(&report, true);
            if report.is_colliding() {
                blockers.insert(Blocker::Trajectory(rec.trajectory.id));
            }
        }
        if self.config.check_static {
            if !self.scene.static_obstacles().is_empty() {
                let report = trajectory_vs_obstacles(&traj, &params, &self.scene)
                    .expect("validated trajectory in a consistent scene");
                stats.add(&report, false);
                if let Some((_, Owner::Static(i))) = report.witness() {
                    blockers.insert(Blocker::Static(*i));
                }
            }
            for (group, posture) in self.scene.idle_postures() {
                if *group == traj.group || self.running.contains_key(group) {
                    continue;
                }
                let report = trajectory_vs_posture(&traj, posture, &params, &self.scene)
                    .expect("validated trajectory in a consistent scene");
                stats.add(&report, false);
                if report.is_colliding() {
                    blockers.insert(Blocker::IdleGroup(group.clone()));
                }
            }
        }
        self.counters.pairwise_checks += stats.checks;
        self.counters.state_evaluations += stats.states;

        if !blockers.is_empty() {
            self.to_backlog(id, blockers, deadline, now, Some(stats));
            return;
        }

        let group = traj.group.clone();
        self.running
            .insert(group.clone(), RunningRecord::new(Arc::clone(&traj), now));
        self.history.segments.push(MotionSegment {
            trajectory: traj,
            start: now,
            stop: None,
        });
        self.set_status(id, ExecStatus::Running { start: now });
        self.log(
            now,
            EventKind::Admitted,
            id,
            format!("group={group} {}", stats.fields()),
        );
    }

    fn to_backlog(
        &mut self,
        id: TrajectoryId,
        blockers: BTreeSet<Blocker>,
        deadline: f64,
        now: f64,
        stats: Option<AdmissionStats>,
    ) {
        let list = blockers
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let stats = stats.unwrap_or_default();
        self.set_status(id, ExecStatus::Backlogged { blockers, deadline });
        self.backlog.push(id);
        let group = self.entries[&id].trajectory.group.clone();
        self.log(
            now,
            EventKind::Backlogged,
            id,
            format!(
                "group={group} blockers={list} deadline={} {}",
                fmt_time(deadline),
                stats.fields()
            ),
        );
    }

    fn abort_timeout(&mut self, id: TrajectoryId, now: f64) {
        let deadline = self.entries[&id].deadline;
        self.set_status(id, ExecStatus::AbortedTimeout { at: now });
        self.log(
            now,
            EventKind::TimeoutAbort,
            id,
            format!("deadline={}", fmt_time(deadline)),
        );
    }

    /// Moves backlog entries waiting on any of `terminated` (or on an idle
    /// arm in `moved`) back into the queue, in submission order.
    fn release(&mut self, terminated: &[TrajectoryId], moved: &[GroupId], now: f64) {
        if terminated.is_empty() && moved.is_empty() {
            return;
        }
        let mut released = Vec::new();
        let entries = &self.entries;
        self.backlog.retain(|id| {
            let ExecStatus::Backlogged { blockers, .. } = &entries[id].status else {
                return true;
            };
            let hit = blockers.iter().find(|b| match b {
                Blocker::Trajectory(t) => terminated.contains(t),
                Blocker::IdleGroup(g) => moved.contains(g),
                Blocker::Static(_) => false,
            });
            match hit {
                Some(b) => {
                    released.push((entries[id].seq, *id, b.clone()));
                    false
                }
                None => true,
            }
        });
        released.sort_by_key(|(seq, _, _)| *seq);
        for (_, id, blocker) in released {
            self.set_status(id, ExecStatus::Pending);
            self.queue.push_back(id);
            self.log(now, EventKind::Requeued, id, format!("blocker={blocker}"));
        }
    }

    fn monitor(&mut self, now: f64) {
        self.counters.monitor_checks += 1;
        let states = self.current_states();
        let report = composite_state_check(&states, &self.scene, self.config.monitor_margin())
            .expect("every group has a state");
        let Some(witness) = report.witness().cloned() else {
            return;
        };
        warn!(
            "monitor found clearance {:.6} m between {} and {} at t={now:.6}; halting",
            report.min_clearance_seen, witness.0, witness.1
        );
        let groups: Vec<GroupId> = self.running.keys().cloned().collect();
        let mut halted = Vec::with_capacity(groups.len());
        for group in &groups {
            let id = self.freeze(group, now);
            self.set_status(
                id,
                ExecStatus::AbortedCollision {
                    at: now,
                    witness: witness.clone(),
                },
            );
            self.log(
                now,
                EventKind::CollisionHalt,
                id,
                format!(
                    "group={group} witness={}|{} clearance={}",
                    witness.0,
                    witness.1,
                    fmt_time(report.min_clearance_seen)
                ),
            );
            halted.push(id);
        }
        self.release(&halted, &groups, now);
    }

    /// Stops a running group where it currently is.
    fn freeze(&mut self, group: &GroupId, now: f64) -> TrajectoryId {
        let rec = self.running.remove(group).expect("group is running");
        self.scene
            .set_idle_posture(state_of(&rec, now))
            .expect("interpolated state stays within limits");
        self.close_segment(rec.trajectory.id, now);
        rec.trajectory.id
    }

    fn close_segment(&mut self, id: TrajectoryId, now: f64) {
        if let Some(seg) = self
            .history
            .segments
            .iter_mut()
            .rev()
            .find(|s| s.trajectory.id == id && s.stop.is_none())
        {
            seg.stop = Some(now);
        }
    }

    fn set_status(&mut self, id: TrajectoryId, status: ExecStatus) {
        if let Some(e) = self.entries.get_mut(&id) {
            e.status = status;
        }
    }

    fn log(&mut self, clock: f64, kind: EventKind, trajectory: TrajectoryId, detail: String) {
        let event = Event {
            clock,
            kind,
            trajectory,
            detail,
        };
        debug!("{event}");
        self.events.push(event);
    }
}

fn state_of(rec: &RunningRecord, now: f64) -> JointState {
    rec.trajectory
        .state_at((now - rec.start_time).max(0.0))
        .expect("non-negative time")
}

#[derive(Debug, Clone, Copy, Default)]
struct AdmissionStats {
    checks: u64,
    states: u64,
    min_clearance: Option<f64>,
}

impl AdmissionStats {
    fn add(&mut self, report: &CollisionReport, pairwise: bool) {
        if pairwise {
            self.checks += 1;
        }
        self.states += report.states_evaluated as u64;
        if report.min_clearance_seen.is_finite() {
            let m = self.min_clearance.map_or(report.min_clearance_seen, |m| {
                m.min(report.min_clearance_seen)
            });
            self.min_clearance = Some(m);
        }
    }

    fn fields(&self) -> String {
        let clearance = self
            .min_clearance
            .map_or_else(|| "none".to_owned(), fmt_time);
        format!(
            "checks={} states={} min_clearance={clearance}",
            self.checks, self.states
        )
    }
}
