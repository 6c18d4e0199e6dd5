//! Timed path planners: safe-interval RRT-Connect and a naive space-time
//! RRT-Connect baseline.

mod baseline;
pub mod nn;
mod path;
mod sirrt;
mod timing;
mod tree;

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Configuration, RobotModel};

pub use baseline::plan_baseline_st;
pub use path::{PathSegment, TimedPath};
pub use sirrt::{connect, extend, plan, plan_in_world, set_parent, trim_wait, unite_trees};
pub use timing::{earliest_arrival, latest_arrival, travel_duration, Timing};
pub use tree::{Direction, Node, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerParams {
    /// Maximum extension step, radians.
    pub delta_planner: f64,
    /// Parent search radius, radians.
    pub delta_parent: f64,
    /// Bound on the joint-velocity L2 norm, rad/s.
    pub v_max: f64,
    /// Wall-clock budget, seconds.
    pub time_budget: f64,
    pub rng_seed: u64,
    /// Optional iteration cap, for runs that must not depend on timing.
    #[serde(default)]
    pub max_iterations: Option<u64>,
    #[serde(default = "default_trim")]
    pub trim: bool,
}

fn default_trim() -> bool {
    true
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            delta_planner: 1.0,
            delta_parent: 3.0,
            v_max: 1.0,
            time_budget: 20.0,
            rng_seed: 0,
            max_iterations: None,
            trim: true,
        }
    }
}

impl PlannerParams {
    pub fn check(&self) -> Result<(), String> {
        if !(self.delta_planner > 0.0) {
            return Err("delta_planner must be positive".into());
        }
        if !(self.delta_parent >= self.delta_planner) {
            return Err("delta_parent must be at least delta_planner".into());
        }
        if !(self.v_max > 0.0) {
            return Err("v_max must be positive".into());
        }
        if !(self.time_budget > 0.0) {
            return Err("time budget must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: u64,
    pub start_nodes: usize,
    pub goal_nodes: usize,
    pub interval_queries: u64,
    pub index_build_s: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanFailure {
    /// The start configuration is not safe from time 0.
    StartBlocked,
    /// The goal configuration has no safe interval reaching the horizon.
    GoalBlocked,
    /// Budget ran out.
    Budget,
    InvalidInstance(String),
}

impl std::fmt::Display for PlanFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanFailure::StartBlocked => write!(f, "start configuration is not safe at t = 0"),
            PlanFailure::GoalBlocked => write!(f, "goal configuration is not safe up to t_max"),
            PlanFailure::Budget => write!(f, "planning budget exhausted"),
            PlanFailure::InvalidInstance(e) => write!(f, "invalid instance: {e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub path: Option<TimedPath>,
    /// The path as assembled from the two trees, before wait trimming.
    pub untrimmed: Option<TimedPath>,
    pub failure: Option<PlanFailure>,
    pub stats: PlanStats,
}

impl PlanOutcome {
    pub(crate) fn solved(path: TimedPath, untrimmed: TimedPath, mut stats: PlanStats, started: Instant) -> Self {
        stats.runtime_s = started.elapsed().as_secs_f64();
        Self { path: Some(path), untrimmed: Some(untrimmed), failure: None, stats }
    }

    pub(crate) fn failed(failure: PlanFailure, mut stats: PlanStats, started: Instant) -> Self {
        stats.runtime_s = started.elapsed().as_secs_f64();
        Self { path: None, untrimmed: None, failure: Some(failure), stats }
    }

    pub fn success(&self) -> bool {
        self.path.is_some()
    }
}

/// Uniform sample within the joint limits.
pub fn sample_configuration<R: Rng + ?Sized>(rng: &mut R, model: &RobotModel) -> Configuration {
    Configuration(
        model
            .joints
            .iter()
            .map(|j| {
                let u: f64 = rng.random();
                j.limits[0] + (j.limits[1] - j.limits[0]) * u
            })
            .collect(),
    )
}
