//! JSON scenario documents.
//!
//! A scenario has the top-level keys `robots`, `obstacles`, `tasks`,
//! `params` and `seed`. Angles are radians, lengths meters, times seconds.
//! Poses are written as `{"xyz": [x, y, z], "rpy": [roll, pitch, yaw]}`,
//! shapes as `{"capsule": {"p0": [..], "p1": [..], "radius": r}}` or
//! `{"sphere": {"center": [..], "radius": r}}`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::{CheckParams, Scene};
use crate::executor::ExecutorConfig;
use crate::geometry::{Owner, PlacedPrimitive, Shape};
use crate::kinematics::{GroupId, JointSpec, JointState, LinkGeometry, LocalShape, RobotModel};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl PoseSpec {
    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::from_euler_angles(self.rpy[0], self.rpy[1], self.rpy[2]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeSpec {
    Sphere { center: [f64; 3], radius: f64 },
    Capsule { p0: [f64; 3], p1: [f64; 3], radius: f64 },
}

fn point(p: [f64; 3]) -> Point3<f64> {
    Point3::new(p[0], p[1], p[2])
}

impl ShapeSpec {
    fn local(&self) -> LocalShape {
        match *self {
            ShapeSpec::Sphere { center, radius } => LocalShape::Sphere {
                center: point(center),
                radius,
            },
            ShapeSpec::Capsule { p0, p1, radius } => LocalShape::Capsule {
                p0: point(p0),
                p1: point(p1),
                radius,
            },
        }
    }

    fn world(&self) -> Shape {
        match *self {
            ShapeSpec::Sphere { center, radius } => Shape::Sphere {
                center: point(center),
                radius,
            },
            ShapeSpec::Capsule { p0, p1, radius } => Shape::Capsule {
                p0: point(p0),
                p1: point(p1),
                radius,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpecDoc {
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: PoseSpec,
    pub limits: [f64; 2],
    pub max_velocity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkDoc {
    pub joint: usize,
    pub shape: ShapeSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotDoc {
    pub group: GroupId,
    #[serde(default)]
    pub base: PoseSpec,
    pub joints: Vec<JointSpecDoc>,
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub allowed_pairs: Vec<[usize; 2]>,
    /// Posture at the start of the run.
    pub initial: Vec<f64>,
}

impl RobotDoc {
    pub fn model(&self) -> Result<RobotModel, HarnessError> {
        let joints = self
            .joints
            .iter()
            .map(|j| {
                JointSpec::new(
                    Vector3::new(j.axis[0], j.axis[1], j.axis[2]),
                    j.origin.isometry(),
                    (j.limits[0], j.limits[1]),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let links = self
            .links
            .iter()
            .map(|l| LinkGeometry {
                joint: l.joint,
                shape: l.shape.local(),
            })
            .collect();
        Ok(RobotModel::new(
            self.group.clone(),
            self.base.isometry(),
            joints,
            links,
            self.joints.iter().map(|j| j.max_velocity).collect(),
            self.allowed_pairs.iter().map(|p| (p[0], p[1])),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub group: GroupId,
    pub goal: Vec<f64>,
    #[serde(default)]
    pub submit_time: f64,
    /// Falls back to `params.backlog_timeout` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub time_step: f64,
    pub margin: f64,
    pub tick: f64,
    pub monitor_period: u64,
    pub backlog_timeout: f64,
    pub check_static: bool,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        let exec = ExecutorConfig::default();
        ScenarioParams {
            time_step: exec.params.dt,
            margin: exec.params.margin,
            tick: exec.tick_length,
            monitor_period: exec.monitor_period,
            backlog_timeout: 30.0,
            check_static: exec.check_static,
        }
    }
}

impl ScenarioParams {
    pub fn check_params(&self) -> CheckParams {
        CheckParams {
            dt: self.time_step,
            margin: self.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub robots: Vec<RobotDoc>,
    #[serde(default)]
    pub obstacles: Vec<ShapeSpec>,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub params: ScenarioParams,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let scenario: Scenario = serde_json::from_str(&text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds the scene with every arm at its initial posture.
    pub fn scene(&self) -> Result<Scene, HarnessError> {
        let models = self
            .robots
            .iter()
            .map(RobotDoc::model)
            .collect::<Result<Vec<_>, _>>()?;
        let postures = self
            .robots
            .iter()
            .map(|r| JointState::new(r.group.clone(), r.initial.clone()));
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, s)| PlacedPrimitive {
                shape: s.world(),
                owner: Owner::Static(i),
            })
            .collect();
        Ok(Scene::new(models, postures, obstacles)?)
    }

    pub fn timeout_of(&self, task: &Task) -> f64 {
        task.timeout.unwrap_or(self.params.backlog_timeout)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |msg: String| Err(HarnessError::ScenarioInvalid(msg));
        let scene = self.scene()?;
        self.params
            .check_params()
            .validate()
            .map_err(|e| HarnessError::ScenarioInvalid(e.to_string()))?;
        if !(self.params.tick > 0.0) {
            return invalid(format!("tick {} must be positive", self.params.tick));
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let Ok(model) = scene.robot(&task.group) else {
                return invalid(format!("task {i} references unknown group {}", task.group));
            };
            let goal = JointState::new(task.group.clone(), task.goal.clone());
            match model.within_limits(&goal) {
                Ok(true) => {}
                Ok(false) => return invalid(format!("task {i} goal is outside joint limits")),
                Err(e) => return invalid(format!("task {i}: {e}")),
            }
            if !(task.submit_time >= 0.0) {
                return invalid(format!("task {i} has a negative submit time"));
            }
            let timeout = self.timeout_of(task);
            if !(timeout > 0.0) || !timeout.is_finite() {
                return invalid(format!("task {i} has a non-positive timeout"));
            }
        }
        Ok(())
    }
}

/// Planar arm document: every joint turns about z, links are capsules along
/// local x.
pub fn planar_robot(
    group: &str,
    base: PoseSpec,
    lengths: &[f64],
    radius: f64,
    max_velocity: f64,
    initial: Vec<f64>,
) -> RobotDoc {
    let mut prev = 0.0;
    let mut joints = Vec::new();
    let mut links = Vec::new();
    for (i, &len) in lengths.iter().enumerate() {
        joints.push(JointSpecDoc {
            axis: [0.0, 0.0, 1.0],
            origin: PoseSpec {
                xyz: [prev, 0.0, 0.0],
                rpy: [0.0; 3],
            },
            limits: [-PI, PI],
            max_velocity,
        });
        links.push(LinkDoc {
            joint: i,
            shape: ShapeSpec::Capsule {
                p0: [0.0; 3],
                p1: [len, 0.0, 0.0],
                radius,
            },
        });
        prev = len;
    }
    RobotDoc {
        group: GroupId::new(group),
        base,
        joints,
        links,
        allowed_pairs: Vec::new(),
        initial,
    }
}

/// Two facing planar 2-link arms sharing the space between their bases,
/// with a random batch of staggered tasks. Deterministic in `seed`.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half_gap = rng.gen_range(0.5..1.0);
    let link = 0.5;
    let radius = 0.05;
    let velocity = rng.gen_range(0.6..1.2);
    let params = ScenarioParams {
        time_step: 0.01,
        margin: 0.0,
        tick: 0.01,
        monitor_period: 5,
        backlog_timeout: 30.0,
        check_static: true,
    };

    let robots_at = |ql: f64, qr: f64| {
        vec![
            planar_robot(
                "left",
                PoseSpec {
                    xyz: [-half_gap, 0.0, 0.0],
                    rpy: [0.0; 3],
                },
                &[link, link],
                radius,
                velocity,
                vec![ql, 0.0],
            ),
            planar_robot(
                "right",
                PoseSpec {
                    xyz: [half_gap, 0.0, 0.0],
                    rpy: [0.0, 0.0, PI],
                },
                &[link, link],
                radius,
                velocity,
                vec![qr, 0.0],
            ),
        ]
    };
    // both start pointing away from each other
    let robots = robots_at(rng.gen_range(2.6..3.1), rng.gen_range(-3.1..-2.6));
    let mut scenario = Scenario {
        robots,
        obstacles: Vec::new(),
        tasks: Vec::new(),
        params,
        seed,
    };

    let scene = scenario.scene().expect("generated scene is valid");
    let margin = 2.0 * scene.max_speed_bound() * params.time_step * 1.05;
    scenario.params.margin = (margin * 1000.0).ceil() / 1000.0;

    for group in ["left", "right"] {
        let count = rng.gen_range(2..=4);
        let mut submit = 0.0;
        for _ in 0..count {
            let goal = vec![rng.gen_range(-PI..PI), rng.gen_range(-1.5..1.5)];
            scenario.tasks.push(Task {
                group: GroupId::new(group),
                goal,
                submit_time: submit,
                timeout: Some(rng.gen_range(2.0..12.0_f64).round()),
            });
            submit += (rng.gen_range(0.0..3.0_f64) * 100.0).round() / 100.0;
        }
    }
    scenario.tasks.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time));
    scenario
}
