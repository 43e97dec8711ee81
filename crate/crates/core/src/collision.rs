//! Time-dependent collision checks: candidate trajectories against running
//! ones, against the static scene and idle arms, and of the consolidated
//! state of every group at one instant.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{closest_pair, Clearance, GeometryError, Owner, PlacedPrimitive};
use crate::kinematics::{GroupId, JointState, KinematicsError, RobotModel};
use crate::trajectory::{sample_times, JointTrajectory, TrajectoryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("no state supplied for group {0}")]
    MissingGroupState(GroupId),
    #[error("cross-robot check called twice with group {0}")]
    SameRobot(GroupId),
    #[error("running trajectory starts at {start}, after the check time {now}")]
    StartsInFuture { start: f64, now: f64 },
    #[error("invalid check parameters: {0}")]
    InvalidParams(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
}

/// Discretization step and clearance threshold of a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckParams {
    pub dt: f64,
    pub margin: f64,
}

impl Default for CheckParams {
    fn default() -> Self {
        CheckParams {
            dt: 0.05,
            margin: 0.02,
        }
    }
}

impl CheckParams {
    pub fn new(dt: f64, margin: f64) -> Result<Self, CollisionError> {
        let params = CheckParams { dt, margin };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CollisionError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(CollisionError::InvalidParams(format!(
                "time step {} must be positive",
                self.dt
            )));
        }
        if !(self.margin >= 0.0) || !self.margin.is_finite() {
            return Err(CollisionError::InvalidParams(format!(
                "margin {} must be non-negative",
                self.margin
            )));
        }
        Ok(())
    }

    /// Whether sampling at `dt` cannot step over a contact between bodies
    /// whose points move no faster than `speed_bound`.
    pub fn is_sound_for(&self, speed_bound: f64) -> bool {
        self.margin >= required_margin(speed_bound, self.dt)
    }
}

/// Smallest margin for which discrete checking at `dt` is sound when every
/// primitive point moves at most `speed_bound`.
pub fn required_margin(speed_bound: f64, dt: f64) -> f64 {
    2.0 * speed_bound * dt
}

/// Static obstacles, robot models and the posture of every idle group.
#[derive(Debug, Clone)]
pub struct Scene {
    robots: BTreeMap<GroupId, RobotModel>,
    idle_postures: BTreeMap<GroupId, JointState>,
    static_obstacles: Vec<PlacedPrimitive>,
}

impl Scene {
    pub fn new(
        robots: impl IntoIterator<Item = RobotModel>,
        idle_postures: impl IntoIterator<Item = JointState>,
        static_obstacles: Vec<PlacedPrimitive>,
    ) -> Result<Self, CollisionError> {
        let mut robot_map = BTreeMap::new();
        for model in robots {
            if model.links().is_empty() {
                return Err(CollisionError::InvalidScene(format!(
                    "group {} has no collision geometry",
                    model.group()
                )));
            }
            let group = model.group().clone();
            if robot_map.insert(group.clone(), model).is_some() {
                return Err(CollisionError::InvalidScene(format!("duplicate group {group}")));
            }
        }
        let mut scene = Scene {
            robots: robot_map,
            idle_postures: BTreeMap::new(),
            static_obstacles: Vec::new(),
        };
        for posture in idle_postures {
            scene.set_idle_posture(posture)?;
        }
        if let Some(missing) = scene
            .robots
            .keys()
            .find(|g| !scene.idle_postures.contains_key(*g))
        {
            return Err(CollisionError::MissingGroupState(missing.clone()));
        }
        for (i, mut obstacle) in static_obstacles.into_iter().enumerate() {
            let (p0, p1, r) = obstacle.segment();
            if !p0.iter().chain(p1.iter()).all(|c| c.is_finite()) || !(r > 0.0) {
                return Err(CollisionError::InvalidScene(format!("obstacle {i} is malformed")));
            }
            obstacle.owner = Owner::Static(i);
            scene.static_obstacles.push(obstacle);
        }
        Ok(scene)
    }

    pub fn robots(&self) -> &BTreeMap<GroupId, RobotModel> {
        &self.robots
    }

    pub fn robot(&self, group: &GroupId) -> Result<&RobotModel, CollisionError> {
        self.robots
            .get(group)
            .ok_or_else(|| CollisionError::UnknownGroup(group.clone()))
    }

    pub fn idle_postures(&self) -> &BTreeMap<GroupId, JointState> {
        &self.idle_postures
    }

    pub fn idle_posture(&self, group: &GroupId) -> Result<&JointState, CollisionError> {
        self.idle_postures
            .get(group)
            .ok_or_else(|| CollisionError::MissingGroupState(group.clone()))
    }

    /// Replaces a group's resting posture; it must be within limits.
    pub fn set_idle_posture(&mut self, posture: JointState) -> Result<(), CollisionError> {
        self.robot(&posture.group)?.joint_frames(&posture)?;
        self.idle_postures.insert(posture.group.clone(), posture);
        Ok(())
    }

    pub fn static_obstacles(&self) -> &[PlacedPrimitive] {
        &self.static_obstacles
    }

    /// Largest point-speed bound over all robots.
    pub fn max_speed_bound(&self) -> f64 {
        self.robots
            .values()
            .map(RobotModel::max_cartesian_speed_bound)
            .fold(0.0, f64::max)
    }
}

/// A trajectory executing since `start_time` (absolute simulated seconds).
#[derive(Debug, Clone)]
pub struct RunningRecord {
    pub trajectory: Arc<JointTrajectory>,
    pub start_time: f64,
}

impl RunningRecord {
    pub fn new(trajectory: impl Into<Arc<JointTrajectory>>, start_time: f64) -> Self {
        RunningRecord {
            trajectory: trajectory.into(),
            start_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Clear,
    Colliding {
        /// Seconds after the candidate's start.
        time: f64,
        witness: (Owner, Owner),
        clearance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    pub verdict: Verdict,
    /// Smallest clearance over every evaluated state; infinite when there
    /// was nothing to compare against.
    pub min_clearance_seen: f64,
    pub states_evaluated: usize,
}

impl CollisionReport {
    pub fn is_colliding(&self) -> bool {
        matches!(self.verdict, Verdict::Colliding { .. })
    }

    pub fn first_collision_time(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Colliding { time, .. } => Some(time),
            Verdict::Clear => None,
        }
    }

    pub fn witness(&self) -> Option<&(Owner, Owner)> {
        match &self.verdict {
            Verdict::Colliding { witness, .. } => Some(witness),
            Verdict::Clear => None,
        }
    }
}

/// Accumulates per-state clearances into a report.
struct Scan {
    margin: f64,
    min: f64,
    first: Option<(f64, Clearance)>,
    states: usize,
}

impl Scan {
    fn new(margin: f64) -> Self {
        Scan {
            margin,
            min: f64::INFINITY,
            first: None,
            states: 0,
        }
    }

    fn observe(&mut self, time: f64, clearance: Option<Clearance>) {
        self.states += 1;
        let Some(c) = clearance else { return };
        self.min = self.min.min(c.signed_distance);
        if self.first.is_none() && c.signed_distance <= self.margin {
            self.first = Some((time, c));
        }
    }

    fn finish(self) -> CollisionReport {
        let verdict = match self.first {
            Some((time, c)) => Verdict::Colliding {
                time,
                witness: c.witness,
                clearance: c.signed_distance,
            },
            None => Verdict::Clear,
        };
        CollisionReport {
            verdict,
            min_clearance_seen: self.min,
            states_evaluated: self.states,
        }
    }
}

fn min_of(a: Option<Clearance>, b: Option<Clearance>) -> Option<Clearance> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.signed_distance < a.signed_distance { b } else { a }),
        (a, b) => a.or(b),
    }
}

fn cross_clearance(
    a: &[PlacedPrimitive],
    b: &[PlacedPrimitive],
    margin: f64,
) -> Result<Option<Clearance>, CollisionError> {
    Ok(closest_pair(a, b, margin, |_, _| true)?.map(|(_, _, c)| c))
}

fn self_clearance(
    model: &RobotModel,
    placed: &[PlacedPrimitive],
    margin: f64,
) -> Result<Option<Clearance>, CollisionError> {
    Ok(closest_pair(placed, placed, margin, |i, j| i < j && !model.is_allowed(i, j))?
        .map(|(_, _, c)| c))
}

/// Minimum clearance between two different robots; allowed pairs never apply
/// across robots.
pub fn state_pair_check(
    model_a: &RobotModel,
    q_a: &JointState,
    model_b: &RobotModel,
    q_b: &JointState,
    margin: f64,
) -> Result<Clearance, CollisionError> {
    if model_a.group() == model_b.group() {
        return Err(CollisionError::SameRobot(model_a.group().clone()));
    }
    let a = model_a.forward_kinematics(q_a)?;
    let b = model_b.forward_kinematics(q_b)?;
    cross_clearance(&a, &b, margin)?.ok_or_else(|| {
        CollisionError::InvalidScene("robot without collision geometry".into())
    })
}

/// Checks `candidate`, assumed to start at `now`, against a running
/// trajectory. Both sides are interpolated at shared timestamps; the
/// horizon covers whichever of the two ends later, with held final states.
pub fn trajectory_vs_running(
    candidate: &JointTrajectory,
    running: &RunningRecord,
    now: f64,
    params: &CheckParams,
    scene: &Scene,
) -> Result<CollisionReport, CollisionError> {
    params.validate()?;
    let offset = now - running.start_time;
    if offset < 0.0 {
        return Err(CollisionError::StartsInFuture {
            start: running.start_time,
            now,
        });
    }
    let model_c = scene.robot(&candidate.group)?;
    let model_r = scene.robot(&running.trajectory.group)?;
    if model_c.group() == model_r.group() {
        return Err(CollisionError::SameRobot(model_c.group().clone()));
    }
    let remaining = (running.trajectory.duration() - offset).max(0.0);
    let horizon = candidate.duration().max(remaining);

    let mut scan = Scan::new(params.margin);
    for tau in sample_times(params.dt, horizon)? {
        let a = model_c.forward_kinematics(&candidate.state_at(tau)?)?;
        let b = model_r.forward_kinematics(&running.trajectory.state_at(offset + tau)?)?;
        scan.observe(tau, cross_clearance(&a, &b, params.margin)?);
    }
    Ok(scan.finish())
}

fn scan_against_fixed(
    candidate: &JointTrajectory,
    fixed: &[PlacedPrimitive],
    params: &CheckParams,
    scene: &Scene,
) -> Result<CollisionReport, CollisionError> {
    params.validate()?;
    let model = scene.robot(&candidate.group)?;
    let mut scan = Scan::new(params.margin);
    for tau in sample_times(params.dt, candidate.duration())? {
        let placed = model.forward_kinematics(&candidate.state_at(tau)?)?;
        scan.observe(tau, cross_clearance(&placed, fixed, params.margin)?);
    }
    Ok(scan.finish())
}

/// Candidate against the static obstacles only.
pub fn trajectory_vs_obstacles(
    candidate: &JointTrajectory,
    params: &CheckParams,
    scene: &Scene,
) -> Result<CollisionReport, CollisionError> {
    scan_against_fixed(candidate, scene.static_obstacles(), params, scene)
}

/// Candidate against another group frozen at `posture`.
pub fn trajectory_vs_posture(
    candidate: &JointTrajectory,
    posture: &JointState,
    params: &CheckParams,
    scene: &Scene,
) -> Result<CollisionReport, CollisionError> {
    if posture.group == candidate.group {
        return Err(CollisionError::SameRobot(posture.group.clone()));
    }
    let placed = scene.robot(&posture.group)?.forward_kinematics(posture)?;
    scan_against_fixed(candidate, &placed, params, scene)
}

/// Candidate against static obstacles and the idle postures of every group
/// not in `excluded_groups`. The candidate's own group is always excluded.
pub fn trajectory_vs_static(
    candidate: &JointTrajectory,
    scene: &Scene,
    excluded_groups: &BTreeSet<GroupId>,
    params: &CheckParams,
) -> Result<CollisionReport, CollisionError> {
    let mut fixed = scene.static_obstacles().to_vec();
    for (group, posture) in scene.idle_postures() {
        if group == &candidate.group || excluded_groups.contains(group) {
            continue;
        }
        fixed.extend(scene.robot(group)?.forward_kinematics(posture)?);
    }
    scan_against_fixed(candidate, &fixed, params, scene)
}

/// One check of every group's current state together: self-collision under
/// each robot's allowed pairs, every cross-robot pair, and robot versus
/// static obstacles.
pub fn composite_state_check(
    states: &BTreeMap<GroupId, JointState>,
    scene: &Scene,
    margin: f64,
) -> Result<CollisionReport, CollisionError> {
    let mut placed = Vec::with_capacity(scene.robots().len());
    for (group, model) in scene.robots() {
        let state = states
            .get(group)
            .ok_or_else(|| CollisionError::MissingGroupState(group.clone()))?;
        placed.push((model, model.forward_kinematics(state)?));
    }

    let mut best = None;
    for (i, (model, prims)) in placed.iter().enumerate() {
        best = min_of(best, self_clearance(model, prims, margin)?);
        for (_, other) in &placed[i + 1..] {
            best = min_of(best, cross_clearance(prims, other, margin)?);
        }
        best = min_of(best, cross_clearance(prims, scene.static_obstacles(), margin)?);
    }

    let mut scan = Scan::new(margin);
    scan.observe(0.0, best);
    Ok(scan.finish())
}


#[cfg(test)]
mod tests {
    use super::fixtures::{facing_arms, sweep};
    use super::*;
    use crate::geometry::{primitive_clearance, Shape};
    use crate::kinematics::fixtures::planar_arm;
    use nalgebra::{Isometry3, Point3};
    use std::f64::consts::PI;

    fn params() -> CheckParams {
        CheckParams::new(0.01, 0.04).unwrap()
    }

    /// Clearance of the two facing arms at the given base angles, by brute
    /// force over every capsule pair.
    fn oracle_clearance(scene: &Scene, ql: f64, qr: f64) -> f64 {
        let l = scene.robots()[&GroupId::from("left")]
            .forward_kinematics(&JointState::new("left", vec![ql, 0.0]))
            .unwrap();
        let r = scene.robots()[&GroupId::from("right")]
            .forward_kinematics(&JointState::new("right", vec![qr, 0.0]))
            .unwrap();
        l.iter()
            .flat_map(|a| r.iter().map(move |b| primitive_clearance(a, b).unwrap().signed_distance))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn far_apart_arms_are_clear() {
        let a = planar_arm("a", Isometry3::identity(), &[1.0, 1.0], 0.1, 1.0);
        let b = planar_arm("b", Isometry3::translation(10.0, 0.0, 0.0), &[1.0, 1.0], 0.1, 1.0);
        for q in [[0.0, 0.0], [1.0, -2.0], [PI, PI]] {
            let c = state_pair_check(
                &a,
                &JointState::new("a", q.to_vec()),
                &b,
                &JointState::new("b", vec![PI, 0.0]),
                0.02,
            )
            .unwrap();
            // right arm folded back toward the left one: 10 - 2 - 2 - 0.2 at worst
            assert!(c.signed_distance >= 5.8 - 1e-9);
        }
    }

    #[test]
    fn arms_pointing_at_each_other_overlap() {
        let a = planar_arm("a", Isometry3::identity(), &[1.0, 1.0], 0.1, 1.0);
        let b = planar_arm("b", Isometry3::translation(1.0, 0.0, 0.0), &[1.0, 1.0], 0.1, 1.0);
        let qa = JointState::new("a", vec![0.0, 0.0]);
        let qb = JointState::new("b", vec![PI, 0.0]);
        let c = state_pair_check(&a, &qa, &b, &qb, 0.0).unwrap();
        let pa = a.forward_kinematics(&qa).unwrap();
        let pb = b.forward_kinematics(&qb).unwrap();
        let oracle = pa
            .iter()
            .flat_map(|x| pb.iter().map(move |y| primitive_clearance(x, y).unwrap().signed_distance))
            .fold(f64::INFINITY, f64::min);
        assert!(c.signed_distance < 0.0);
        assert_eq!(c.signed_distance, oracle);
    }

    #[test]
    fn same_robot_is_a_contract_error() {
        let a = planar_arm("a", Isometry3::identity(), &[1.0], 0.1, 1.0);
        let q = JointState::new("a", vec![0.0]);
        assert_eq!(
            state_pair_check(&a, &q, &a, &q, 0.0),
            Err(CollisionError::SameRobot(GroupId::from("a")))
        );
    }

    #[test]
    fn disjoint_motions_are_clear() {
        let scene = facing_arms();
        // left swings on its far side, right stays up
        let cand = sweep(1, "left", PI / 2.0, PI, 1.0);
        let run = RunningRecord::new(sweep(2, "right", -PI / 2.0, -PI, 1.0), 0.0);
        let report = trajectory_vs_running(&cand, &run, 0.0, &params(), &scene).unwrap();
        assert_eq!(report.verdict, Verdict::Clear);
        assert!(report.min_clearance_seen > 0.04);
    }

    #[test]
    fn crossing_sweeps_collide_near_dense_oracle() {
        let scene = facing_arms();
        let p = params();
        let cand = sweep(1, "left", PI / 2.0, -PI / 2.0, 1.0);
        let run = RunningRecord::new(sweep(2, "right", -PI / 2.0, PI / 2.0, 1.0), 0.0);
        let report = trajectory_vs_running(&cand, &run, 0.0, &p, &scene).unwrap();
        let found = report.first_collision_time().expect("must collide");

        let dense = p.dt / 100.0;
        let oracle = (0..)
            .map(|k| k as f64 * dense)
            .take_while(|&t| t <= PI)
            .find(|&t| {
                let ql = PI / 2.0 - t;
                let qr = -PI / 2.0 + t;
                oracle_clearance(&scene, ql, qr) <= p.margin
            })
            .unwrap();
        assert!((found - oracle).abs() <= p.dt, "{found} vs {oracle}");
    }

    #[test]
    fn finished_running_trajectory_is_held() {
        let scene = facing_arms();
        // right went to pointing at the left base and finished long ago
        let run = RunningRecord::new(sweep(2, "right", -PI / 2.0, 0.0, 1.0), 0.0);
        let cand = sweep(1, "left", PI / 2.0, -PI / 2.0, 1.0);
        let report = trajectory_vs_running(&cand, &run, 100.0, &params(), &scene).unwrap();
        assert!(report.is_colliding());
        let static_equiv = trajectory_vs_posture(
            &cand,
            &JointState::new("right", vec![0.0, 0.0]),
            &params(),
            &scene,
        )
        .unwrap();
        assert_eq!(report.first_collision_time(), static_equiv.first_collision_time());
    }

    #[test]
    fn short_candidate_parked_in_the_path_is_caught() {
        let scene = facing_arms();
        // candidate reaches horizontal instantly-ish then parks; right sweeps in later
        let cand = sweep(1, "left", PI / 2.0, 0.0, 1.0);
        let run = RunningRecord::new(sweep(2, "right", -PI / 2.0, PI / 2.0, 0.2), 0.0);
        let report = trajectory_vs_running(&cand, &run, 0.0, &params(), &scene).unwrap();
        let t = report.first_collision_time().unwrap();
        assert!(t > cand.duration());
    }

    #[test]
    fn running_in_the_future_is_rejected() {
        let scene = facing_arms();
        let cand = sweep(1, "left", 0.0, 0.1, 1.0);
        let run = RunningRecord::new(sweep(2, "right", 0.0, 0.1, 1.0), 5.0);
        assert!(matches!(
            trajectory_vs_running(&cand, &run, 1.0, &params(), &scene),
            Err(CollisionError::StartsInFuture { .. })
        ));
        assert!(matches!(
            trajectory_vs_running(&cand, &run, 5.0, &CheckParams { dt: 0.0, margin: 0.0 }, &scene),
            Err(CollisionError::InvalidParams(_))
        ));
    }

    #[test]
    fn swapping_roles_at_common_origin_agrees() {
        let scene = facing_arms();
        let p = params();
        for (sl, sr) in [(1.0, 1.0), (0.7, 1.0), (1.0, 0.3), (0.5, 0.5)] {
            let l = sweep(1, "left", PI / 2.0, -PI / 2.0, sl);
            let r = sweep(2, "right", -PI / 2.0, PI / 2.0, sr);
            let a = trajectory_vs_running(&l, &RunningRecord::new(r.clone(), 3.0), 3.0, &p, &scene)
                .unwrap();
            let b = trajectory_vs_running(&r, &RunningRecord::new(l.clone(), 3.0), 3.0, &p, &scene)
                .unwrap();
            assert_eq!(a.is_colliding(), b.is_colliding());
            assert_eq!(a.first_collision_time(), b.first_collision_time());
            assert_eq!(a.min_clearance_seen, b.min_clearance_seen);
        }
    }

    #[test]
    fn margin_and_step_monotonicity() {
        let scene = facing_arms();
        let cand = sweep(1, "left", PI / 2.0, 0.3, 1.0);
        let run = RunningRecord::new(sweep(2, "right", -PI / 2.0, -0.3, 1.0), 0.0);
        let mut colliding_before = false;
        for margin in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
            let r = trajectory_vs_running(&cand, &run, 0.0, &CheckParams::new(0.05, margin).unwrap(), &scene)
                .unwrap();
            assert!(!colliding_before || r.is_colliding());
            colliding_before = r.is_colliding();
        }
        assert!(colliding_before);
        let coarse = trajectory_vs_running(&cand, &run, 0.0, &CheckParams::new(0.08, 0.0).unwrap(), &scene)
            .unwrap();
        for k in 2..6 {
            let fine = trajectory_vs_running(
                &cand,
                &run,
                0.0,
                &CheckParams::new(0.08 / k as f64, 0.0).unwrap(),
                &scene,
            )
            .unwrap();
            assert!(coarse.min_clearance_seen >= fine.min_clearance_seen);
        }
    }

    #[test]
    fn static_checks() {
        let scene = facing_arms();
        let p = params();
        let cand = sweep(1, "left", PI / 2.0, -PI / 2.0, 1.0);
        // nothing static, right arm parked pointing up, away from the sweep
        let excluded = BTreeSet::new();
        assert_eq!(
            trajectory_vs_static(&cand, &scene, &excluded, &p).unwrap().verdict,
            Verdict::Clear
        );

        let empty = Scene::new(
            [scene.robot(&"left".into()).unwrap().clone()],
            [JointState::new("left", vec![0.0, 0.0])],
            vec![],
        )
        .unwrap();
        let r = trajectory_vs_static(&cand, &empty, &excluded, &p).unwrap();
        assert_eq!(r.verdict, Verdict::Clear);
        assert_eq!(r.min_clearance_seen, f64::INFINITY);

        // obstacle where the arm tip passes at the sweep's midpoint
        let obstacle = PlacedPrimitive {
            shape: Shape::Sphere {
                center: Point3::new(0.38, 0.0, 0.0),
                radius: 0.05,
            },
            owner: Owner::Static(0),
        };
        let with_obstacle = Scene::new(
            scene.robots().values().cloned(),
            scene.idle_postures().values().cloned(),
            vec![obstacle],
        )
        .unwrap();
        let r = trajectory_vs_static(&cand, &with_obstacle, &excluded, &p).unwrap();
        let t = r.first_collision_time().unwrap();
        let dense = (0..)
            .map(|k| k as f64 * p.dt / 100.0)
            .take_while(|&t| t <= PI)
            .find(|&t| {
                let placed = with_obstacle.robots()[&GroupId::from("left")]
                    .forward_kinematics(&cand.state_at(t).unwrap())
                    .unwrap();
                placed
                    .iter()
                    .map(|x| primitive_clearance(x, &with_obstacle.static_obstacles()[0]).unwrap().signed_distance)
                    .fold(f64::INFINITY, f64::min)
                    <= p.margin
            })
            .unwrap();
        assert!((t - dense).abs() <= p.dt);
        assert!((t - PI / 2.0).abs() < 0.2);
    }

    #[test]
    fn idle_arm_in_reach_blocks_unless_excluded() {
        let scene = facing_arms();
        let mut scene = scene;
        // right arm parked pointing at the left base
        scene
            .set_idle_posture(JointState::new("right", vec![0.0, 0.0]))
            .unwrap();
        let cand = sweep(1, "left", PI / 2.0, -PI / 2.0, 1.0);
        let p = params();
        let r = trajectory_vs_static(&cand, &scene, &BTreeSet::new(), &p).unwrap();
        assert!(r.is_colliding());
        let (a, b) = r.witness().unwrap();
        assert_eq!(a.group(), Some(&GroupId::from("left")));
        assert_eq!(b.group(), Some(&GroupId::from("right")));
        let excluded = BTreeSet::from([GroupId::from("right")]);
        assert!(!trajectory_vs_static(&cand, &scene, &excluded, &p).unwrap().is_colliding());
    }

    #[test]
    fn composite_examples() {
        let scene = facing_arms();
        let one = Scene::new(
            [scene.robot(&"left".into()).unwrap().clone()],
            [JointState::new("left", vec![0.0, 0.0])],
            vec![],
        )
        .unwrap();
        let states = BTreeMap::from([("left".into(), JointState::new("left", vec![0.0, 0.0]))]);
        let r = composite_state_check(&states, &one, 0.02).unwrap();
        assert_eq!(r.verdict, Verdict::Clear);

        // right base turned slightly down: its proximal link passes under the
        // left distal tip, which is the unique closest pair
        let states = BTreeMap::from([
            ("left".into(), JointState::new("left", vec![0.0, 0.0])),
            ("right".into(), JointState::new("right", vec![0.15, 0.0])),
        ]);
        let r = composite_state_check(&states, &scene, 0.0).unwrap();
        let placed_l = scene.robots()[&GroupId::from("left")]
            .forward_kinematics(&states[&GroupId::from("left")])
            .unwrap();
        let placed_r = scene.robots()[&GroupId::from("right")]
            .forward_kinematics(&states[&GroupId::from("right")])
            .unwrap();
        let mut all: Vec<Clearance> = placed_l
            .iter()
            .flat_map(|a| placed_r.iter().map(move |b| primitive_clearance(a, b).unwrap()))
            .collect();
        all.sort_by(|a, b| a.signed_distance.total_cmp(&b.signed_distance));
        assert!(all[0].signed_distance < 0.0);
        assert!(all[1].signed_distance > all[0].signed_distance + 1e-3);
        assert_eq!(
            all[0].witness,
            (
                Owner::Link { group: "left".into(), link: 1 },
                Owner::Link { group: "right".into(), link: 0 },
            )
        );
        assert_eq!(r.witness().unwrap(), &all[0].witness);
        assert_eq!(r.min_clearance_seen, all[0].signed_distance);

        let missing = BTreeMap::from([("left".into(), JointState::new("left", vec![0.0, 0.0]))]);
        assert_eq!(
            composite_state_check(&missing, &scene, 0.0),
            Err(CollisionError::MissingGroupState("right".into()))
        );
    }

    #[test]
    fn composite_margin_semantics() {
        let scene = facing_arms();
        let states = BTreeMap::from([
            ("left".into(), JointState::new("left", vec![1.0, 0.0])),
            ("right".into(), JointState::new("right", vec![1.0, 0.0])),
        ]);
        let measured = composite_state_check(&states, &scene, 0.0).unwrap();
        assert!(!measured.is_colliding());
        assert!(measured.min_clearance_seen > 0.0);
        let raised = composite_state_check(&states, &scene, measured.min_clearance_seen + 1e-3).unwrap();
        assert!(raised.is_colliding());
    }

    #[test]
    fn composite_equals_minimum_of_parts() {
        let scene = facing_arms();
        let obstacle = PlacedPrimitive {
            shape: Shape::Capsule {
                p0: Point3::new(0.0, -0.2, -1.0),
                p1: Point3::new(0.0, -0.2, 1.0),
                radius: 0.05,
            },
            owner: Owner::Static(0),
        };
        let scene = Scene::new(
            scene.robots().values().cloned(),
            scene.idle_postures().values().cloned(),
            vec![obstacle],
        )
        .unwrap();
        let left = &scene.robots()[&GroupId::from("left")];
        let right = &scene.robots()[&GroupId::from("right")];
        for k in 0..40 {
            let ql = -PI + k as f64 * 0.157;
            let qr = PI - k as f64 * 0.11;
            let sl = JointState::new("left", vec![ql, 0.4]);
            let sr = JointState::new("right", vec![qr, -0.6]);
            let states = BTreeMap::from([("left".into(), sl.clone()), ("right".into(), sr.clone())]);
            let composite = composite_state_check(&states, &scene, 0.0).unwrap();
            let pair = state_pair_check(left, &sl, right, &sr, 0.0).unwrap().signed_distance;
            let stat = [(&sl, left), (&sr, right)]
                .iter()
                .flat_map(|(s, m)| m.forward_kinematics(s).unwrap())
                .map(|p| primitive_clearance(&p, &scene.static_obstacles()[0]).unwrap().signed_distance)
                .fold(f64::INFINITY, f64::min);
            // two-link arms have no non-adjacent self pairs
            assert_eq!(composite.min_clearance_seen, pair.min(stat));
        }
    }

    #[test]
    fn speed_bound_soundness_rule() {
        let scene = facing_arms();
        let v = scene.max_speed_bound();
        assert!((v - 1.6).abs() < 1e-12);
        assert!(params().is_sound_for(v));
        assert!(!CheckParams::default().is_sound_for(v));
        assert!((required_margin(v, 0.01) - 0.032).abs() < 1e-12);
    }

    #[test]
    fn scene_validation() {
        let scene = facing_arms();
        let left = scene.robot(&"left".into()).unwrap().clone();
        assert!(matches!(
            Scene::new([left.clone(), left.clone()], [JointState::new("left", vec![0.0, 0.0])], vec![]),
            Err(CollisionError::InvalidScene(_))
        ));
        assert!(matches!(
            Scene::new([left.clone()], [], vec![]),
            Err(CollisionError::MissingGroupState(_))
        ));
        assert!(Scene::new([left], [JointState::new("left", vec![9.0, 0.0])], vec![]).is_err());
    }
}
