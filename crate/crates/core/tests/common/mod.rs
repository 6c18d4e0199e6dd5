#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::Isometry3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sirrt_core::{
    config_collides, Aabb, Capsule, Configuration, DynamicObstacle, Joint, ProblemInstance, RobotModel, Scene,
    StaticObstacle, TimeGrid, Vec3,
};

pub const T_MAX: f64 = 20.0;
pub const FREQ: f64 = 30.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3::new(x, y, z)
}

pub fn random_point(rng: &mut impl Rng, half: f64) -> Vec3 {
    v(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(-half..half))
}

/// Single horizontal arm of length 1 turning about z; at angle `a` its tip
/// sits at `(cos a, sin a, 0)`.
pub fn arm() -> RobotModel {
    RobotModel::new(
        vec![Joint { axis: Vec3::z_axis(), translation: Vec3::zeros(), limits: [-PI, PI] }],
        vec![Capsule::new(Vec3::zeros(), v(1.0, 0.0, 0.0), 0.05)],
        Isometry3::identity(),
    )
    .unwrap()
}

pub fn q(a: f64) -> Configuration {
    Configuration::new(vec![a])
}

/// Point at distance `r` from the base along the arm held at angle `a`.
pub fn on_arm(a: f64, r: f64) -> Vec3 {
    v(r * a.cos(), r * a.sin(), 0.0)
}

pub fn arm_scene(statics: Vec<StaticObstacle>, dynamics: Vec<DynamicObstacle>) -> Scene {
    Scene {
        robot: arm(),
        statics,
        dynamics,
        grid: TimeGrid::new(T_MAX, FREQ).unwrap(),
        bounds: Aabb::cube(Vec3::zeros(), 2.0),
    }
}

pub fn arm_instance(dynamics: Vec<DynamicObstacle>, start: f64, goal: f64) -> ProblemInstance {
    ProblemInstance { scene: arm_scene(vec![], dynamics), q_start: q(start), q_goal: q(goal), seed: 0 }
}

/// Sphere sitting at `p` during `[from, to]` and parked far above the
/// arm otherwise, moving between the two within `ramp` seconds.
pub fn visitor(p: Vec3, from: f64, to: f64, ramp: f64) -> DynamicObstacle {
    let away = p + v(0.0, 0.0, 3.0);
    let mut wp = Vec::new();
    if from > 0.0 {
        wp.push((0.0, away));
        if from - ramp > 0.0 {
            wp.push((from - ramp, away));
        }
    }
    wp.push((from, p));
    if to < T_MAX {
        wp.push((to, p));
        if to + ramp < T_MAX {
            wp.push((to + ramp, away));
        }
        wp.push((T_MAX, away));
    } else {
        wp.push((T_MAX, p));
    }
    DynamicObstacle::new(0.05, wp).unwrap()
}

/// Samples of a timed move as the collision contract defines them: both
/// endpoints and every tick in between. Interpolation written out here.
pub fn motion_sample_times(depart: f64, arrive: f64, freq: f64) -> Vec<f64> {
    let mut out = vec![depart, arrive];
    let mut k = (depart * freq).floor().max(0.0) as usize;
    while (k as f64) / freq <= arrive {
        let t = k as f64 / freq;
        if t >= depart {
            out.push(t);
        }
        k += 1;
    }
    out
}

pub fn lerp_at(from: &Configuration, to: &Configuration, depart: f64, arrive: f64, t: f64) -> Configuration {
    if t <= depart {
        return from.clone();
    }
    if t >= arrive {
        return to.clone();
    }
    let s = (t - depart) / (arrive - depart);
    Configuration::new(from.0.iter().zip(&to.0).map(|(a, b)| a + (b - a) * s).collect())
}

/// Independent per-sample motion check at `freq`.
pub fn motion_hits(scene: &Scene, from: &Configuration, to: &Configuration, depart: f64, arrive: f64, freq: f64) -> bool {
    motion_sample_times(depart, arrive, freq)
        .into_iter()
        .any(|t| config_collides(scene, &lerp_at(from, to, depart, arrive, t), t))
}

/// Minimum of a convex function on `[0, 1]` by ternary search.
fn ternary_min(f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

/// Segment-segment distance by nested ternary search over both segment
/// parameters. The distance is jointly convex in them, so the inner
/// minimum is convex in the outer parameter as well.
pub fn refined_segment_distance(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    let dist = |s: f64, t: f64| ((a0 + (a1 - a0) * s) - (b0 + (b1 - b0) * t)).norm();
    ternary_min(|s| ternary_min(|t| dist(s, t)))
}

/// Point-to-segment distance by the textbook projection, written out.
pub fn point_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(&ab);
    let s = if len2 == 0.0 { 0.0 } else { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) };
    (p - (a + ab * s)).norm()
}
