//! Shapes, distance kernels and forward kinematics for capsule chains.

use nalgebra::{Isometry3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Sphere {
    pub fn new(center: Vec3, radius: f64) -> Self {
        Self { center, radius }
    }
}

/// A segment swept by a sphere. Coincident endpoints give a sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vec3, b: Vec3, radius: f64) -> Self {
        Self { a, b, radius }
    }

    pub fn transformed(&self, pose: &Isometry3<f64>) -> Self {
        Self {
            a: pose.transform_point(&self.a.into()).coords,
            b: pose.transform_point(&self.b.into()).coords,
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Self { min, max }
    }

    pub fn cube(center: Vec3, half_width: f64) -> Self {
        let h = Vec3::repeat(half_width);
        Self::new(center - h, center + h)
    }

    /// Closed-box overlap; touching faces count.
    #[inline]
    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && self.max.x >= other.min.x
            && self.min.y <= other.max.y
            && self.max.y >= other.min.y
            && self.min.z <= other.max.z
            && self.max.z >= other.min.z
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        (0..3).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        self.contains_point(&other.min) && self.contains_point(&other.max)
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn inflated(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb { min: self.min - m, max: self.max + m }
    }
}

/// Shapes that have an axis-aligned bound.
pub trait Bounded {
    fn aabb(&self, inflation: f64) -> Aabb;
}

impl Bounded for Sphere {
    #[inline]
    fn aabb(&self, inflation: f64) -> Aabb {
        let r = Vec3::repeat(self.radius + inflation);
        Aabb { min: self.center - r, max: self.center + r }
    }
}

impl Bounded for Capsule {
    #[inline]
    fn aabb(&self, inflation: f64) -> Aabb {
        let r = Vec3::repeat(self.radius + inflation);
        Aabb {
            min: self.a.inf(&self.b) - r,
            max: self.a.sup(&self.b) + r,
        }
    }
}

pub fn aabb_of<S: Bounded>(shape: &S, inflation: f64) -> Aabb {
    shape.aabb(inflation)
}

/// Parameter in `[0, 1]` of the point on `a0..a1` closest to `p`.
#[inline]
fn closest_param_on_segment(p: &Vec3, a0: &Vec3, a1: &Vec3) -> f64 {
    let ab = a1 - a0;
    let len2 = ab.norm_squared();
    if len2 <= f64::MIN_POSITIVE {
        return 0.0;
    }
    ((p - a0).dot(&ab) / len2).clamp(0.0, 1.0)
}

#[inline]
pub fn point_segment_distance_squared(p: &Vec3, a0: &Vec3, a1: &Vec3) -> f64 {
    let t = closest_param_on_segment(p, a0, a1);
    let closest = a0 + (a1 - a0) * t;
    (p - closest).norm_squared()
}

pub fn point_segment_distance(p: &Vec3, a0: &Vec3, a1: &Vec3) -> f64 {
    point_segment_distance_squared(p, a0, a1).sqrt()
}

fn lex_less(a: &Vec3, b: &Vec3) -> bool {
    for i in 0..3 {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

/// Exact minimum distance between segments `a0..a1` and `b0..b1`.
///
/// Degenerate segments are treated as points. The argument pairs are put in a
/// canonical order first so the result is bitwise symmetric.
pub fn segment_segment_distance(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> f64 {
    let swap = lex_less(b0, a0) || (b0 == a0 && lex_less(b1, a1));
    let (p0, p1, q0, q1) = if swap { (b0, b1, a0, a1) } else { (a0, a1, b0, b1) };
    let (s, t) = closest_params(p0, p1, q0, q1);
    let c1 = p0 + (p1 - p0) * s;
    let c2 = q0 + (q1 - q0) * t;
    // Near-parallel pairs lose precision in the interior solve; a boundary
    // minimum is always one of the endpoint projections.
    (c1 - c2)
        .norm_squared()
        .min(point_segment_distance_squared(p0, q0, q1))
        .min(point_segment_distance_squared(p1, q0, q1))
        .min(point_segment_distance_squared(q0, p0, p1))
        .min(point_segment_distance_squared(q1, p0, p1))
        .sqrt()
}

/// Closest-point parameters on two segments (clamped, Ericson-style).
fn closest_params(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (f64, f64) {
    const EPS: f64 = 1e-300;
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    if a <= EPS && e <= EPS {
        return (0.0, 0.0);
    }
    if a <= EPS {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(&r);
    if e <= EPS {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }

    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    // Parallel (or nearly) segments: any s works, pick 0 and let the
    // clamping below find the best t, then re-project.
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Tangency counts as contact.
#[inline]
pub fn capsule_sphere_collides(c: &Capsule, s: &Sphere) -> bool {
    let reach = c.radius + s.radius;
    let d2 = point_segment_distance_squared(&s.center, &c.a, &c.b);
    let r2 = reach * reach;
    // The squared comparison is decisive away from the boundary; near it fall
    // back to the literal distance test.
    if d2 > r2 * (1.0 + 1e-9) {
        false
    } else if d2 < r2 * (1.0 - 1e-9) {
        true
    } else {
        d2.sqrt() <= reach
    }
}

pub fn capsule_capsule_collides(c1: &Capsule, c2: &Capsule) -> bool {
    segment_segment_distance(&c1.a, &c1.b, &c2.a, &c2.b) <= c1.radius + c2.radius
}

/// Joint angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(pub Vec<f64>);

impl Configuration {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn distance(&self, other: &Configuration) -> f64 {
        config_distance(&self.0, &other.0)
    }

    /// Point at fraction `s` of the way towards `other`. `s = 0` and `s = 1`
    /// return the endpoints exactly.
    pub fn lerp(&self, other: &Configuration, s: f64) -> Configuration {
        if s <= 0.0 {
            return self.clone();
        }
        if s >= 1.0 {
            return other.clone();
        }
        let mut out = Vec::with_capacity(self.len());
        self.lerp_into(other, s, &mut out);
        Configuration(out)
    }

    /// [`Self::lerp`] written into a reusable buffer.
    pub fn lerp_into(&self, other: &Configuration, s: f64, out: &mut Vec<f64>) {
        out.clear();
        if s <= 0.0 {
            out.extend_from_slice(&self.0);
        } else if s >= 1.0 {
            out.extend_from_slice(&other.0);
        } else {
            out.extend(self.0.iter().zip(&other.0).map(|(a, b)| a + (b - a) * s));
        }
    }
}

impl std::ops::Index<usize> for Configuration {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[inline]
pub fn config_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub axis: Unit<Vec3>,
    /// Offset from this joint's frame to the next one, applied after the rotation.
    pub translation: Vec3,
    pub limits: [f64; 2],
}

/// Serial revolute chain. Link `i` is rigidly attached to the frame of joint
/// `i` after its rotation and before its translation.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub joints: Vec<Joint>,
    pub links: Vec<Capsule>,
    pub base: Isometry3<f64>,
    pub self_collision: bool,
}

impl RobotModel {
    pub fn new(joints: Vec<Joint>, links: Vec<Capsule>, base: Isometry3<f64>) -> Result<Self> {
        let model = Self { joints, links, base, self_collision: false };
        model.check()?;
        Ok(model)
    }

    pub fn check(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidModel("robot needs at least one joint".into()));
        }
        if self.links.len() != self.joints.len() {
            return Err(Error::InvalidModel(format!(
                "{} joints but {} link capsules",
                self.joints.len(),
                self.links.len()
            )));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if !(j.limits[0] <= j.limits[1]) {
                return Err(Error::InvalidModel(format!("joint {i}: limits out of order")));
            }
            if !j.translation.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidModel(format!("joint {i}: non-finite translation")));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            if !(l.radius > 0.0) || !l.radius.is_finite() {
                return Err(Error::InvalidModel(format!("link {i}: radius must be positive")));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn max_link_radius(&self) -> f64 {
        self.links.iter().map(|l| l.radius).fold(0.0, f64::max)
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof()
            && self.joints.iter().zip(q).all(|(j, &a)| j.limits[0] <= a && a <= j.limits[1])
    }

    pub fn check_configuration(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch { expected: self.dof(), got: q.len() });
        }
        for (i, (j, &a)) in self.joints.iter().zip(q).enumerate() {
            if !(j.limits[0] <= a && a <= j.limits[1]) {
                return Err(Error::JointLimit { joint: i, angle: a, lo: j.limits[0], hi: j.limits[1] });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (a, j) in q.iter_mut().zip(&self.joints) {
            *a = a.clamp(j.limits[0], j.limits[1]);
        }
    }

    /// Sum of link extents and joint offsets; bounds the distance of any
    /// robot point from the base.
    pub fn reach(&self) -> f64 {
        let offsets: f64 = self.joints.iter().map(|j| j.translation.norm()).sum();
        let links = self
            .links
            .iter()
            .map(|l| l.a.norm().max(l.b.norm()) + l.radius)
            .fold(0.0, f64::max);
        offsets + links
    }

    /// World-frame capsules, one per link. Skips validation; callers on hot
    /// paths must pass a configuration of the right length.
    pub fn link_capsules(&self, q: &[f64], out: &mut Vec<Capsule>) {
        debug_assert_eq!(q.len(), self.dof());
        out.clear();
        let mut frame = self.base;
        for ((joint, link), &angle) in self.joints.iter().zip(&self.links).zip(q) {
            frame *= UnitQuaternion::from_axis_angle(&joint.axis, angle);
            out.push(link.transformed(&frame));
            frame *= Translation3::from(joint.translation);
        }
    }

    /// True if any pair of non-adjacent links overlaps.
    pub fn self_collides(&self, capsules: &[Capsule]) -> bool {
        for i in 0..capsules.len() {
            for j in (i + 2)..capsules.len() {
                if capsule_capsule_collides(&capsules[i], &capsules[j]) {
                    return true;
                }
            }
        }
        false
    }
}

pub fn forward_kinematics(model: &RobotModel, q: &Configuration) -> Result<Vec<Capsule>> {
    model.check_configuration(q.as_slice())?;
    let mut out = Vec::with_capacity(model.dof());
    model.link_capsules(q.as_slice(), &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn z_joint(t: Vec3) -> Joint {
        Joint { axis: Vec3::z_axis(), translation: t, limits: [-PI, PI] }
    }

    #[test]
    fn zero_configuration_stacks_links() {
        let joints = vec![z_joint(v(0.0, 0.0, 0.5)), z_joint(v(0.0, 0.0, 0.5))];
        let links = vec![
            Capsule::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.5), 0.05),
            Capsule::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 0.5), 0.05),
        ];
        let model = RobotModel::new(joints, links, Isometry3::identity()).unwrap();
        let caps = forward_kinematics(&model, &Configuration::zeros(2)).unwrap();
        assert_eq!(caps[0].a, v(0.0, 0.0, 0.0));
        assert_eq!(caps[0].b, v(0.0, 0.0, 0.5));
        assert_eq!(caps[1].a, v(0.0, 0.0, 0.5));
        assert_eq!(caps[1].b, v(0.0, 0.0, 1.0));
    }

    #[test]
    fn quarter_turn() {
        let model = RobotModel::new(
            vec![z_joint(Vec3::zeros())],
            vec![Capsule::new(Vec3::zeros(), v(1.0, 0.0, 0.0), 0.1)],
            Isometry3::identity(),
        )
        .unwrap();
        let caps = forward_kinematics(&model, &Configuration::new(vec![PI / 2.0])).unwrap();
        assert_abs_diff_eq!(caps[0].a, Vec3::zeros(), epsilon = 1e-15);
        assert_abs_diff_eq!(caps[0].b, v(0.0, 1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn fk_rejects_bad_input() {
        let model = RobotModel::new(
            vec![z_joint(Vec3::zeros())],
            vec![Capsule::new(Vec3::zeros(), v(1.0, 0.0, 0.0), 0.1)],
            Isometry3::identity(),
        )
        .unwrap();
        assert!(matches!(
            forward_kinematics(&model, &Configuration::zeros(2)),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
        assert!(matches!(
            forward_kinematics(&model, &Configuration::new(vec![4.0])),
            Err(Error::JointLimit { joint: 0, .. })
        ));
    }

    #[test]
    fn segment_distance_basic_cases() {
        let d = segment_segment_distance(
            &v(0.0, 0.0, 0.0),
            &v(1.0, 0.0, 0.0),
            &v(0.0, 1.0, 0.0),
            &v(1.0, 1.0, 0.0),
        );
        assert_eq!(d, 1.0);
        let d = segment_segment_distance(
            &v(-1.0, 0.0, 0.0),
            &v(1.0, 0.0, 0.0),
            &v(0.0, -1.0, 0.0),
            &v(0.0, 1.0, 0.0),
        );
        assert_eq!(d, 0.0);
        // point vs segment, point vs point
        let p = v(0.5, 2.0, 0.0);
        assert_eq!(segment_segment_distance(&p, &p, &v(0.0, 0.0, 0.0), &v(1.0, 0.0, 0.0)), 2.0);
        assert_eq!(segment_segment_distance(&p, &p, &v(0.5, 0.0, 0.0), &v(0.5, 0.0, 0.0)), 2.0);
        // collinear, disjoint
        let d = segment_segment_distance(
            &v(0.0, 0.0, 0.0),
            &v(1.0, 0.0, 0.0),
            &v(3.0, 0.0, 0.0),
            &v(2.0, 0.0, 0.0),
        );
        assert_eq!(d, 1.0);
    }

    #[test]
    fn capsule_sphere_cases() {
        let c = Capsule::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 1.0), 0.1);
        assert!(capsule_sphere_collides(&c, &Sphere::new(v(0.0, 0.0, 0.5), 0.05)));
        assert!(!capsule_sphere_collides(&c, &Sphere::new(v(1.0, 0.0, 0.5), 0.05)));
        assert!(capsule_sphere_collides(&c, &Sphere::new(v(0.15, 0.0, 0.5), 0.05)));
        // beyond the cap
        assert!(!capsule_sphere_collides(&c, &Sphere::new(v(0.0, 0.0, 1.2), 0.05)));
        assert!(capsule_sphere_collides(&c, &Sphere::new(v(0.0, 0.0, 1.14), 0.05)));
    }

    #[test]
    fn capsule_capsule_cases() {
        let c = Capsule::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 1.0), 0.1);
        assert!(capsule_capsule_collides(&c, &c));
        let far = Capsule::new(v(1.0, 0.0, 0.0), v(1.0, 0.0, 1.0), 0.1);
        assert!(!capsule_capsule_collides(&c, &far));
    }

    #[test]
    fn aabb_cases() {
        let s = Sphere::new(Vec3::zeros(), 0.1);
        let b = aabb_of(&s, 0.0);
        assert_eq!(b.min, v(-0.1, -0.1, -0.1));
        assert_eq!(b.max, v(0.1, 0.1, 0.1));
        let c = Capsule::new(Vec3::zeros(), v(1.0, 0.0, 0.0), 0.1);
        let b = aabb_of(&c, 0.0);
        assert_eq!(b.min, v(-0.1, -0.1, -0.1));
        assert_eq!(b.max, v(1.1, 0.1, 0.1));
        let b = aabb_of(&c, 0.05);
        assert_abs_diff_eq!(b.min, v(-0.15, -0.15, -0.15), epsilon = 1e-15);
        assert_abs_diff_eq!(b.max, v(1.15, 0.15, 0.15), epsilon = 1e-15);
    }

    #[test]
    fn self_collision_skips_neighbours() {
        let a = Capsule::new(v(0.0, 0.0, 0.0), v(0.0, 0.0, 1.0), 0.1);
        let b = Capsule::new(v(0.0, 0.0, 1.0), v(1.0, 0.0, 1.0), 0.1);
        let c = Capsule::new(v(1.0, 0.0, 1.0), v(0.05, 0.0, 0.5), 0.1);
        let model = RobotModel::new(
            vec![z_joint(Vec3::zeros()); 3],
            vec![a, b, c],
            Isometry3::identity(),
        )
        .unwrap();
        assert!(model.self_collides(&[a, b, c]));
        assert!(!model.self_collides(&[a, b]));
    }
}
