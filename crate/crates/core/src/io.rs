//! JSON file formats for robot models, problem instances and timed paths.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Capsule, Configuration, Joint, RobotModel, Sphere, Vec3};
use crate::planner::{PathSegment, PlanStats, PlannerParams, TimedPath};
use crate::scene::{DynamicObstacle, ProblemInstance, Scene, StaticObstacle, TimeGrid};

const XARM6_JSON: &str = include_str!("../data/xarm6.json");

/// Name under which an instance file may refer to the bundled model.
pub const XARM6_NAME: &str = "xarm6";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDto {
    pub axis: [f64; 3],
    pub translation: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapsuleDto {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

/// Rigid transform as a translation plus an axis-angle rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseDto {
    pub translation: [f64; 3],
    #[serde(default = "z_axis")]
    pub axis: [f64; 3],
    #[serde(default)]
    pub angle: f64,
}

fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotDto {
    pub joints: Vec<JointDto>,
    pub links: Vec<CapsuleDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<PoseDto>,
    #[serde(default)]
    pub self_collision: bool,
}

/// Either a model written inline or a reference to one: the bundled
/// model's name, or a path relative to the referring file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RobotRef {
    Inline(RobotDto),
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDto {
    pub t_max: f64,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StaticDto {
    Sphere { center: [f64; 3], radius: f64 },
    Capsule { a: [f64; 3], b: [f64; 3], radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicDto {
    pub radius: f64,
    /// Rows of `[t, x, y, z]`.
    pub waypoints: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsDto {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDto {
    pub robot: RobotRef,
    pub grid: GridDto,
    #[serde(default)]
    pub statics: Vec<StaticDto>,
    #[serde(default)]
    pub dynamics: Vec<DynamicDto>,
    pub q_start: Vec<f64>,
    pub q_goal: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    pub bounds: BoundsDto,
}

/// Planner output plus the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub planner: String,
    pub segments: Vec<PathSegment>,
    pub t_arrival: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meet: Option<usize>,
    pub params: PlannerParams,
    pub seed: u64,
    pub stats: PlanStats,
}

impl PathFile {
    pub fn new(planner: &str, path: &TimedPath, params: &PlannerParams, stats: &PlanStats) -> Self {
        Self {
            planner: planner.to_string(),
            segments: path.segments.clone(),
            t_arrival: path.t_arrival,
            meet: path.meet,
            params: params.clone(),
            seed: params.rng_seed,
            stats: stats.clone(),
        }
    }

    pub fn path(&self) -> TimedPath {
        TimedPath { segments: self.segments.clone(), t_arrival: self.t_arrival, meet: self.meet }
    }
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn unit(a: [f64; 3], what: &str) -> Result<Unit<Vec3>> {
    Unit::try_new(v3(a), 1e-12).ok_or_else(|| Error::InvalidModel(format!("{what} axis has zero length")))
}

impl RobotDto {
    pub fn to_model(&self) -> Result<RobotModel> {
        let joints = self
            .joints
            .iter()
            .map(|j| {
                Ok(Joint {
                    axis: unit(j.axis, "joint")?,
                    translation: v3(j.translation),
                    limits: j.limits.unwrap_or([-std::f64::consts::PI, std::f64::consts::PI]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let links = self.links.iter().map(|c| Capsule::new(v3(c.a), v3(c.b), c.radius)).collect();
        let base = match &self.base {
            None => Isometry3::identity(),
            Some(p) => Isometry3::from_parts(
                Translation3::from(v3(p.translation)),
                UnitQuaternion::from_axis_angle(&unit(p.axis, "base")?, p.angle),
            ),
        };
        let mut model = RobotModel::new(joints, links, base)?;
        model.self_collision = self.self_collision;
        Ok(model)
    }

    pub fn from_model(model: &RobotModel) -> Self {
        let (axis, angle) = model.base.rotation.axis_angle().map(|(a, t)| (arr(&a), t)).unwrap_or((z_axis(), 0.0));
        Self {
            joints: model
                .joints
                .iter()
                .map(|j| JointDto { axis: arr(&j.axis), translation: arr(&j.translation), limits: Some(j.limits) })
                .collect(),
            links: model.links.iter().map(|c| CapsuleDto { a: arr(&c.a), b: arr(&c.b), radius: c.radius }).collect(),
            base: Some(PoseDto { translation: arr(&model.base.translation.vector), axis, angle }),
            self_collision: model.self_collision,
        }
    }
}

/// The bundled six-joint arm, roughly 0.7 m from shoulder to tool.
pub fn xarm6() -> RobotModel {
    let dto: RobotDto = serde_json::from_str(XARM6_JSON).expect("bundled model parses");
    dto.to_model().expect("bundled model is valid")
}

impl InstanceDto {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let s = &inst.scene;
        Self {
            robot: RobotRef::Inline(RobotDto::from_model(&s.robot)),
            grid: GridDto { t_max: s.grid.t_max, frequency: s.grid.frequency },
            statics: s
                .statics
                .iter()
                .map(|o| match o {
                    StaticObstacle::Sphere(sp) => StaticDto::Sphere { center: arr(&sp.center), radius: sp.radius },
                    StaticObstacle::Capsule(c) => StaticDto::Capsule { a: arr(&c.a), b: arr(&c.b), radius: c.radius },
                })
                .collect(),
            dynamics: s
                .dynamics
                .iter()
                .map(|o| DynamicDto {
                    radius: o.radius,
                    waypoints: o.waypoints.iter().map(|(t, p)| [*t, p.x, p.y, p.z]).collect(),
                })
                .collect(),
            q_start: inst.q_start.0.clone(),
            q_goal: inst.q_goal.0.clone(),
            seed: inst.seed,
            bounds: BoundsDto { min: arr(&s.bounds.min), max: arr(&s.bounds.max) },
        }
    }

    /// Builds the instance; `base_dir` resolves relative robot file paths.
    pub fn to_instance(&self, base_dir: Option<&Path>) -> Result<ProblemInstance> {
        let robot = match &self.robot {
            RobotRef::Inline(dto) => dto.to_model()?,
            RobotRef::File(name) if name == XARM6_NAME => xarm6(),
            RobotRef::File(name) => {
                let p = match base_dir {
                    Some(dir) => dir.join(name),
                    None => PathBuf::from(name),
                };
                load_robot(&p)?
            }
        };
        let b = &self.bounds;
        if (0..3).any(|i| !(b.min[i] <= b.max[i])) {
            return Err(Error::InvalidScene("bounds min exceeds max".into()));
        }
        let statics = self
            .statics
            .iter()
            .map(|s| match s {
                StaticDto::Sphere { center, radius } => StaticObstacle::Sphere(Sphere::new(v3(*center), *radius)),
                StaticDto::Capsule { a, b, radius } => StaticObstacle::Capsule(Capsule::new(v3(*a), v3(*b), *radius)),
            })
            .collect();
        let dynamics = self
            .dynamics
            .iter()
            .map(|d| DynamicObstacle::new(d.radius, d.waypoints.iter().map(|w| (w[0], Vec3::new(w[1], w[2], w[3]))).collect()))
            .collect::<Result<Vec<_>>>()?;
        let inst = ProblemInstance {
            scene: Scene {
                robot,
                statics,
                dynamics,
                grid: TimeGrid::new(self.grid.t_max, self.grid.frequency)?,
                bounds: Aabb::new(v3(b.min), v3(b.max)),
            },
            q_start: Configuration::new(self.q_start.clone()),
            q_goal: Configuration::new(self.q_goal.clone()),
            seed: self.seed,
        };
        inst.check()?;
        Ok(inst)
    }
}

pub fn load_robot(path: &Path) -> Result<RobotModel> {
    let dto: RobotDto = serde_json::from_str(&fs::read_to_string(path)?)?;
    dto.to_model()
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceDto::from_instance(inst)).expect("instance serializes")
}

pub fn instance_from_json(text: &str, base_dir: Option<&Path>) -> Result<ProblemInstance> {
    let dto: InstanceDto = serde_json::from_str(text)?;
    dto.to_instance(base_dir)
}

pub fn save_instance(path: &Path, inst: &ProblemInstance) -> Result<()> {
    fs::write(path, instance_to_json(inst))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    instance_from_json(&fs::read_to_string(path)?, path.parent())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn load_path_file(path: &Path) -> Result<PathFile> {
    let file: PathFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_instance, GeneratorParams};

    #[test]
    fn bundled_model_shape() {
        let m = xarm6();
        assert_eq!(m.dof(), 6);
        assert!(!m.self_collision);
        // Shoulder to tool tip, arm straight up.
        let caps = crate::geometry::forward_kinematics(&m, &Configuration::zeros(6)).unwrap();
        let shoulder = caps[1].a;
        let tip = caps[5].b;
        let len = (tip - shoulder).norm();
        assert!((len - 0.7).abs() < 0.05, "arm length {len}");
        assert!(m.reach() >= (tip.norm() + 0.04));
    }

    #[test]
    fn instance_round_trip() {
        let inst = generate_instance(3, 4, &GeneratorParams::default()).unwrap();
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text, None).unwrap();
        assert_eq!(back, inst);
        assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn robot_by_name_and_defaults() {
        let mut dto = InstanceDto::from_instance(&generate_instance(1, 0, &GeneratorParams::default()).unwrap());
        dto.robot = RobotRef::File(XARM6_NAME.into());
        let inst = dto.to_instance(None).unwrap();
        assert_eq!(inst.scene.robot, xarm6());

        let robot: RobotDto =
            serde_json::from_str(r#"{"joints":[{"axis":[0,0,1],"translation":[0,0,1]}],"links":[{"a":[0,0,0],"b":[1,0,0],"radius":0.1}]}"#)
                .unwrap();
        let m = robot.to_model().unwrap();
        assert_eq!(m.joints[0].limits, [-std::f64::consts::PI, std::f64::consts::PI]);
        assert_eq!(m.base, Isometry3::identity());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(instance_from_json("{", None).is_err());
        let robot: RobotDto =
            serde_json::from_str(r#"{"joints":[{"axis":[0,0,0],"translation":[0,0,1]}],"links":[{"a":[0,0,0],"b":[1,0,0],"radius":0.1}]}"#)
                .unwrap();
        assert!(robot.to_model().is_err());
    }
}
