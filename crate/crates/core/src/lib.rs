//! Safe-interval RRT-Connect for a capsule-chain manipulator among spheres
//! moving along known trajectories.
//!
//! The pieces, bottom up: [`geometry`] (shapes, distances, forward
//! kinematics), [`scene`] (obstacles, time grid, instance generator),
//! [`collision`] (timed broad-phase index and safe intervals), [`planner`]
//! (the interval planner and a space-time baseline) and [`validate`]
//! (naive re-checking used as ground truth).

pub mod collision;
pub mod error;
pub mod geometry;
pub mod io;
pub mod planner;
pub mod scene;
pub mod validate;

pub use collision::{
    broad_candidates, build_timed_index, compute_safe_intervals, config_collides, interpolate_motion, motion_collides,
    CollisionWorld, SafeInterval, SafeIntervalSet, TimedBody, TimedIndex,
};
pub use error::{Error, Result};
pub use geometry::{
    aabb_of, capsule_capsule_collides, capsule_sphere_collides, forward_kinematics, segment_segment_distance, Aabb,
    Capsule, Configuration, Joint, RobotModel, Sphere, Vec3,
};
pub use planner::{plan, plan_baseline_st, PlanFailure, PlanOutcome, PlanStats, PlannerParams, TimedPath};
pub use scene::{
    generate_instance, incremental_extend, position_at, DynamicObstacle, GeneratorParams, ProblemInstance, Scene,
    StaticObstacle, TimeGrid,
};
pub use validate::{naive_safe_intervals, validate_path, ValidationReport, Violation, ViolationKind};
