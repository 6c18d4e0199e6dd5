//! Independent checks: dense re-sampling of timed paths and per-tick safe
//! intervals computed without the timed index. Only the narrow-phase
//! kernels are shared with the planner side.

use serde::{Deserialize, Serialize};

use crate::collision::{config_collides, SafeIntervalSet};
use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::planner::TimedPath;
use crate::scene::{ProblemInstance, Scene};

/// Slack on the joint-speed bound, rad/s.
pub const SPEED_EPS: f64 = 1e-9;
/// Slack on timestamp and endpoint comparisons.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Collision,
    Continuity,
    Speed,
    Limits,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time: f64,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub checked_samples: usize,
}

impl ValidationReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

fn configs_equal(a: &Configuration, b: &Configuration) -> bool {
    a.len() == b.len() && a.distance(b) <= TIME_EPS
}

/// Checks `path` against `instance`, sampling the robot's pose at
/// `frequency` over `[0, t_arrival]` plus the arrival instant itself.
pub fn validate_path(path: &TimedPath, instance: &ProblemInstance, frequency: f64, v_max: f64) -> Result<ValidationReport> {
    let scene = &instance.scene;
    let robot = &scene.robot;
    if !(frequency > 0.0) || frequency < scene.grid.frequency {
        return Err(Error::MalformedPath(format!(
            "validation frequency {frequency} Hz is below the scene's {} Hz",
            scene.grid.frequency
        )));
    }
    if path.segments.is_empty() {
        return Err(Error::MalformedPath("path has no waypoints".into()));
    }
    if let Some(s) = path.segments.iter().find(|s| s.q.len() != robot.dof()) {
        return Err(Error::MalformedPath(format!(
            "waypoint has {} joints, robot has {}",
            s.q.len(),
            robot.dof()
        )));
    }
    if path.segments.iter().any(|s| ![s.depart, s.arrive, s.wait_until].iter().all(|t| t.is_finite())) {
        return Err(Error::MalformedPath("non-finite timestamp".into()));
    }

    let mut violations = Vec::new();
    let mut flag = |time: f64, kind: ViolationKind, detail: String| violations.push(Violation { time, kind, detail });

    let first = &path.segments[0];
    let last = path.segments.last().unwrap();
    if !configs_equal(&first.q, &instance.q_start) {
        flag(0.0, ViolationKind::Continuity, "path does not start at q_start".into());
    }
    if first.depart != 0.0 || first.arrive != 0.0 {
        flag(first.arrive, ViolationKind::Interval, "first waypoint must be at time 0".into());
    }
    if !configs_equal(&last.q, &instance.q_goal) {
        flag(path.t_arrival, ViolationKind::Continuity, "path does not end at q_goal".into());
    }
    if (path.t_arrival - last.arrive).abs() > TIME_EPS {
        flag(path.t_arrival, ViolationKind::Interval, format!("t_arrival differs from last arrival {}", last.arrive));
    }
    if path.t_arrival > scene.grid.t_max + TIME_EPS {
        flag(path.t_arrival, ViolationKind::Interval, format!("arrival after t_max = {}", scene.grid.t_max));
    }

    for (i, s) in path.segments.iter().enumerate() {
        if !robot.within_limits(s.q.as_slice()) {
            flag(s.arrive, ViolationKind::Limits, format!("waypoint {i} outside joint limits"));
        }
        if !(s.depart <= s.arrive) || !(s.arrive <= s.wait_until + TIME_EPS) {
            flag(s.arrive, ViolationKind::Interval, format!("waypoint {i}: timestamps out of order"));
        }
        if i == 0 {
            continue;
        }
        let prev = &path.segments[i - 1];
        if (s.depart - prev.wait_until).abs() > TIME_EPS {
            flag(s.depart, ViolationKind::Continuity, format!(
                "waypoint {i}: departs at {} but predecessor waits until {}",
                s.depart, prev.wait_until
            ));
        }
        let dist = prev.q.distance(&s.q);
        let dt = s.arrive - s.depart;
        if dist > 0.0 && (dt <= 0.0 || dist / dt > v_max + SPEED_EPS) {
            flag(s.depart, ViolationKind::Speed, format!("waypoint {i}: {dist} rad in {dt} s"));
        }
    }

    let horizon = path.t_arrival.min(scene.grid.t_max);
    let mut samples: Vec<f64> = (0..).map(|k| k as f64 / frequency).take_while(|&t| t <= horizon).collect();
    if samples.last() != Some(&horizon) {
        samples.push(horizon);
    }
    for &t in &samples {
        if config_collides(scene, &path.configuration_at(t), t) {
            flag(t, ViolationKind::Collision, "robot intersects an obstacle".into());
        }
    }

    Ok(ValidationReport { valid: violations.is_empty(), violations, checked_samples: samples.len() })
}

/// Safe intervals from one independent collision test per tick.
pub fn naive_safe_intervals(scene: &Scene, q: &Configuration) -> SafeIntervalSet {
    let grid = &scene.grid;
    let mask: Vec<bool> = (0..grid.tick_count()).map(|k| config_collides(scene, q, grid.time(k))).collect();
    SafeIntervalSet::from_collision_mask(grid, &mask)
}
