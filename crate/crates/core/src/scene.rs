//! World model: time grid, static and moving obstacles, problem instances and
//! the seeded random instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{
    capsule_capsule_collides, capsule_sphere_collides, Aabb, Capsule, Configuration, RobotModel,
    Sphere, Vec3,
};

/// Uniform sampling of `[0, t_max]`; tick `k` is at `k / frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub frequency: f64,
    tick_count: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, frequency: f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidScene(format!(
                "time grid needs positive t_max and frequency, got {t_max} s at {frequency} Hz"
            )));
        }
        // Guard against products like 19.999999 * 30 landing just below an integer.
        let tick_count = (t_max * frequency + 1e-9).floor() as usize + 1;
        Ok(Self { t_max, frequency, tick_count })
    }

    pub fn tick_count(&self) -> usize {
        self.tick_count
    }

    pub fn last_tick(&self) -> usize {
        self.tick_count - 1
    }

    #[inline]
    pub fn time(&self, tick: usize) -> f64 {
        tick as f64 / self.frequency
    }

    /// Smallest tick whose time is `>= t`, if any.
    pub fn tick_at_or_after(&self, t: f64) -> Option<usize> {
        if t <= 0.0 {
            return Some(0);
        }
        let mut k = (t * self.frequency).ceil() as usize;
        while k > 0 && self.time(k - 1) >= t {
            k -= 1;
        }
        while k < self.tick_count && self.time(k) < t {
            k += 1;
        }
        (k < self.tick_count).then_some(k)
    }

    /// Largest tick whose time is `<= t`, if any.
    pub fn tick_at_or_before(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        let mut k = ((t * self.frequency).floor() as usize).min(self.last_tick());
        while self.time(k) > t {
            if k == 0 {
                return None;
            }
            k -= 1;
        }
        while k < self.last_tick() && self.time(k + 1) <= t {
            k += 1;
        }
        Some(k)
    }

    /// Tick whose time is exactly `t`, if there is one.
    #[inline]
    pub fn exact_tick(&self, t: f64) -> Option<usize> {
        let k = (t * self.frequency).round();
        if k < 0.0 || k as usize >= self.tick_count {
            return None;
        }
        let k = k as usize;
        (self.time(k) == t).then_some(k)
    }
}

/// Sphere following a piecewise-linear trajectory over `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObstacle {
    pub radius: f64,
    pub waypoints: Vec<(f64, Vec3)>,
}

impl DynamicObstacle {
    pub fn new(radius: f64, waypoints: Vec<(f64, Vec3)>) -> Result<Self> {
        let o = Self { radius, waypoints };
        o.check(None)?;
        Ok(o)
    }

    pub fn check(&self, t_max: Option<f64>) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidScene("obstacle radius must be positive".into()));
        }
        let first = self
            .waypoints
            .first()
            .ok_or_else(|| Error::InvalidScene("obstacle without waypoints".into()))?;
        if first.0 != 0.0 {
            return Err(Error::InvalidScene("first waypoint must be at t = 0".into()));
        }
        for w in self.waypoints.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidScene("waypoint times must strictly increase".into()));
            }
        }
        if !self.waypoints.iter().all(|(t, p)| t.is_finite() && p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidScene("non-finite waypoint".into()));
        }
        if let Some(t_max) = t_max {
            let last = self.waypoints.last().unwrap().0;
            if last != t_max {
                return Err(Error::InvalidScene(format!(
                    "trajectory ends at {last}, scene horizon is {t_max}"
                )));
            }
        }
        Ok(())
    }

    pub fn t_end(&self) -> f64 {
        self.waypoints.last().map(|w| w.0).unwrap_or(0.0)
    }

    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        let t_max = self.t_end();
        if !(0.0..=t_max).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_max });
        }
        Ok(self.position_unchecked(t))
    }

    /// Linear interpolation between the bracketing waypoints; exact at
    /// waypoint times. Times outside the trajectory clamp to its ends.
    #[inline]
    pub fn position_unchecked(&self, t: f64) -> Vec3 {
        let idx = self.waypoints.partition_point(|(wt, _)| *wt <= t);
        self.interpolate(idx, t)
    }

    /// Positions at non-decreasing `times`, walking the waypoints once.
    /// Bitwise equal to calling [`Self::position_unchecked`] per time.
    pub fn positions_sorted(&self, times: impl IntoIterator<Item = f64>) -> Vec<Vec3> {
        let wp = &self.waypoints;
        let mut idx = 0;
        times
            .into_iter()
            .map(|t| {
                while idx < wp.len() && wp[idx].0 <= t {
                    idx += 1;
                }
                self.interpolate(idx, t)
            })
            .collect()
    }

    /// `idx` is the number of waypoints at or before `t`.
    #[inline]
    fn interpolate(&self, idx: usize, t: f64) -> Vec3 {
        let wp = &self.waypoints;
        if idx == 0 {
            return wp[0].1;
        }
        let (t0, p0) = wp[idx - 1];
        if t0 == t || idx == wp.len() {
            return p0;
        }
        let (t1, p1) = wp[idx];
        p0 + (p1 - p0) * ((t - t0) / (t1 - t0))
    }

    pub fn sphere_at(&self, t: f64) -> Sphere {
        Sphere::new(self.position_unchecked(t), self.radius)
    }

    pub fn max_speed(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).norm() / (w[1].0 - w[0].0))
            .fold(0.0, f64::max)
    }
}

pub fn position_at(o: &DynamicObstacle, t: f64) -> Result<Vec3> {
    o.position_at(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticObstacle {
    Sphere(Sphere),
    Capsule(Capsule),
}

impl StaticObstacle {
    pub fn collides_with(&self, link: &Capsule) -> bool {
        match self {
            StaticObstacle::Sphere(s) => capsule_sphere_collides(link, s),
            StaticObstacle::Capsule(c) => capsule_capsule_collides(link, c),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub robot: RobotModel,
    pub statics: Vec<StaticObstacle>,
    pub dynamics: Vec<DynamicObstacle>,
    pub grid: TimeGrid,
    pub bounds: Aabb,
}

impl Scene {
    pub fn check(&self) -> Result<()> {
        self.robot.check()?;
        for o in &self.dynamics {
            o.check(Some(self.grid.t_max))?;
        }
        Ok(())
    }

    pub fn max_obstacle_radius(&self) -> f64 {
        self.dynamics.iter().map(|o| o.radius).fold(0.0, f64::max)
    }

    /// Time-independent part of the collision test: statics, plus self
    /// collision when the model enables it.
    pub fn static_collision(&self, links: &[Capsule]) -> bool {
        if self.robot.self_collision && self.robot.self_collides(links) {
            return true;
        }
        self.statics.iter().any(|s| links.iter().any(|l| s.collides_with(l)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub scene: Scene,
    pub q_start: Configuration,
    pub q_goal: Configuration,
    pub seed: u64,
}

impl ProblemInstance {
    pub fn check(&self) -> Result<()> {
        self.scene.check()?;
        self.scene.robot.check_configuration(self.q_start.as_slice())?;
        self.scene.robot.check_configuration(self.q_goal.as_slice())?;
        Ok(())
    }
}

/// Knobs of the random instance generator. Defaults replicate the
/// experimental protocol where it is stated and fill the gaps otherwise.
#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub robot: RobotModel,
    pub t_max: f64,
    pub frequency: f64,
    pub radius_range: (f64, f64),
    pub speed_range: (f64, f64),
    /// Seconds between direction changes.
    pub turn_interval: (f64, f64),
    /// Half-width of the workspace cube around the robot base.
    pub half_width: f64,
    /// Minimum joint-space distance between start and goal.
    pub min_separation: f64,
    pub max_attempts: usize,
    pub statics: Vec<StaticObstacle>,
}

impl GeneratorParams {
    pub fn new(robot: RobotModel) -> Self {
        Self {
            robot,
            t_max: 20.0,
            frequency: 30.0,
            radius_range: (0.05, 0.10),
            speed_range: (0.0, 1.0),
            turn_interval: (0.5, 2.0),
            half_width: 1.0,
            min_separation: 1.0,
            max_attempts: 1000,
            statics: Vec::new(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::cube(self.robot.base.translation.vector, self.half_width)
    }
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self::new(crate::io::xarm6())
    }
}

// Stream 0 drives start/goal sampling, stream i + 1 drives obstacle i, so an
// obstacle depends only on (seed, its index) and instances nest.
fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn random_direction(rng: &mut impl Rng) -> Vec3 {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Piecewise-linear constant-speed walk with random turns and elastic
/// reflection at the bounds. Waypoints are emitted at turns and bounces.
fn random_trajectory(rng: &mut impl Rng, params: &GeneratorParams, bounds: &Aabb) -> Vec<(f64, Vec3)> {
    let t_max = params.t_max;
    let mut p = Vec3::new(
        uniform(rng, (bounds.min.x, bounds.max.x)),
        uniform(rng, (bounds.min.y, bounds.max.y)),
        uniform(rng, (bounds.min.z, bounds.max.z)),
    );
    let speed = uniform(rng, params.speed_range);
    let mut vel = random_direction(rng) * speed;
    let mut t = 0.0;
    let mut next_turn = uniform(rng, params.turn_interval);
    let mut waypoints = vec![(0.0, p)];

    loop {
        let mut to_wall = f64::INFINITY;
        for i in 0..3 {
            let dt = if vel[i] > 0.0 {
                (bounds.max[i] - p[i]) / vel[i]
            } else if vel[i] < 0.0 {
                (bounds.min[i] - p[i]) / vel[i]
            } else {
                f64::INFINITY
            };
            to_wall = to_wall.min(dt.max(0.0));
        }
        let bounce = t + to_wall <= next_turn;
        let t_next = (if bounce { t + to_wall } else { next_turn }).min(t_max);
        p += vel * (t_next - t);
        for i in 0..3 {
            p[i] = p[i].clamp(bounds.min[i], bounds.max[i]);
        }
        t = t_next;
        if t >= t_max {
            if waypoints.last().unwrap().0 < t_max {
                waypoints.push((t_max, p));
            } else {
                waypoints.last_mut().unwrap().1 = p;
            }
            break;
        }
        if t > waypoints.last().unwrap().0 {
            waypoints.push((t, p));
        }
        if !bounce {
            vel = random_direction(rng) * speed;
            next_turn = t + uniform(rng, params.turn_interval);
        }
        for i in 0..3 {
            let at_max = p[i] >= bounds.max[i] - 1e-12 && vel[i] > 0.0;
            let at_min = p[i] <= bounds.min[i] + 1e-12 && vel[i] < 0.0;
            if at_max || at_min {
                vel[i] = -vel[i];
            }
        }
    }
    waypoints
}

/// Whether the obstacle touches the robot at any of the given link sets at
/// any grid tick.
fn hits_any(obstacle: &DynamicObstacle, grid: &TimeGrid, poses: &[Vec<Capsule>]) -> bool {
    (0..grid.tick_count()).any(|k| {
        let s = obstacle.sphere_at(grid.time(k));
        poses.iter().flatten().any(|c| capsule_sphere_collides(c, &s))
    })
}

fn random_obstacle(
    seed: u64,
    index: usize,
    params: &GeneratorParams,
    bounds: &Aabb,
    grid: &TimeGrid,
    poses: &[Vec<Capsule>],
) -> Result<DynamicObstacle> {
    let mut rng = stream_rng(seed, index as u64 + 1);
    for _ in 0..params.max_attempts {
        let radius = uniform(&mut rng, params.radius_range);
        let waypoints = random_trajectory(&mut rng, params, bounds);
        let o = DynamicObstacle { radius, waypoints };
        if !hits_any(&o, grid, poses) {
            return Ok(o);
        }
    }
    Err(Error::Generation(format!(
        "obstacle {index}: no trajectory clear of start and goal after {} attempts",
        params.max_attempts
    )))
}

fn sample_start_goal(seed: u64, params: &GeneratorParams) -> Result<(Configuration, Configuration)> {
    let robot = &params.robot;
    let mut rng = stream_rng(seed, 0);
    let probe = Scene {
        robot: robot.clone(),
        statics: params.statics.clone(),
        dynamics: Vec::new(),
        grid: TimeGrid::new(params.t_max, params.frequency)?,
        bounds: params.bounds(),
    };
    let mut links = Vec::new();
    let mut draw = |rng: &mut ChaCha8Rng| -> Option<Configuration> {
        for _ in 0..params.max_attempts {
            let q = crate::planner::sample_configuration(rng, robot);
            robot.link_capsules(q.as_slice(), &mut links);
            if !probe.static_collision(&links) {
                return Some(q);
            }
        }
        None
    };
    for _ in 0..params.max_attempts {
        let (Some(start), Some(goal)) = (draw(&mut rng), draw(&mut rng)) else {
            break;
        };
        if start.distance(&goal) >= params.min_separation {
            return Ok((start, goal));
        }
    }
    Err(Error::Generation("could not sample a valid start/goal pair".into()))
}

fn endpoint_poses(robot: &RobotModel, a: &Configuration, b: &Configuration) -> Vec<Vec<Capsule>> {
    [a, b]
        .iter()
        .map(|q| {
            let mut out = Vec::new();
            robot.link_capsules(q.as_slice(), &mut out);
            out
        })
        .collect()
}

/// Random instance with `k` moving spheres, none of which ever touches the
/// robot at its start or goal configuration on the tick grid.
pub fn generate_instance(seed: u64, k: usize, params: &GeneratorParams) -> Result<ProblemInstance> {
    let grid = TimeGrid::new(params.t_max, params.frequency)?;
    let bounds = params.bounds();
    let (q_start, q_goal) = sample_start_goal(seed, params)?;
    let poses = endpoint_poses(&params.robot, &q_start, &q_goal);
    let dynamics = (0..k)
        .map(|i| random_obstacle(seed, i, params, &bounds, &grid, &poses))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProblemInstance {
        scene: Scene {
            robot: params.robot.clone(),
            statics: params.statics.clone(),
            dynamics,
            grid,
            bounds,
        },
        q_start,
        q_goal,
        seed,
    })
}

/// Appends `extra` fresh obstacles; existing ones are left untouched, so the
/// result equals `generate_instance(seed, base_k + extra)`.
pub fn incremental_extend(
    base: &ProblemInstance,
    extra: usize,
    params: &GeneratorParams,
) -> Result<ProblemInstance> {
    let scene = &base.scene;
    let poses = endpoint_poses(&scene.robot, &base.q_start, &base.q_goal);
    let first = scene.dynamics.len();
    let mut out = base.clone();
    for i in first..first + extra {
        out.scene
            .dynamics
            .push(random_obstacle(base.seed, i, params, &scene.bounds, &scene.grid, &poses)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: Vec3, b: Vec3) -> DynamicObstacle {
        DynamicObstacle::new(0.05, vec![(0.0, a), (20.0, b)]).unwrap()
    }

    #[test]
    fn grid_tick_count() {
        let g = TimeGrid::new(20.0, 30.0).unwrap();
        assert_eq!(g.tick_count(), 601);
        assert_eq!(g.time(600), 20.0);
        assert_eq!(g.tick_at_or_after(8.5), Some(255));
        assert_eq!(g.tick_at_or_after(8.51), Some(256));
        assert_eq!(g.tick_at_or_before(8.51), Some(255));
        assert_eq!(g.tick_at_or_after(20.01), None);
        assert_eq!(g.tick_at_or_before(-0.1), None);
        assert_eq!(g.exact_tick(2.0), Some(60));
        assert_eq!(g.exact_tick(2.01), None);
        assert!(TimeGrid::new(0.0, 30.0).is_err());
    }

    #[test]
    fn midpoint_and_waypoints() {
        let o = line(Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(o.position_at(10.0).unwrap(), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(o.position_at(0.0).unwrap(), Vec3::zeros());
        assert_eq!(o.position_at(20.0).unwrap(), Vec3::new(2.0, 0.0, 0.0));
        assert!(matches!(o.position_at(20.5), Err(Error::TimeOutOfRange { .. })));
        assert!(o.position_at(-1.0).is_err());
    }

    #[test]
    fn sorted_walk_matches_lookup() {
        let inst = generate_instance(5, 3, &GeneratorParams::default()).unwrap();
        let grid = inst.scene.grid;
        for o in &inst.scene.dynamics {
            let times: Vec<f64> = (0..grid.tick_count()).map(|k| grid.time(k)).chain([20.5, 21.0]).collect();
            let walked = o.positions_sorted(times.iter().copied());
            for (t, p) in times.iter().zip(&walked) {
                assert_eq!(*p, o.position_unchecked(*t));
            }
        }
    }

    #[test]
    fn obstacle_validation() {
        assert!(DynamicObstacle::new(0.0, vec![(0.0, Vec3::zeros())]).is_err());
        assert!(DynamicObstacle::new(0.1, vec![(1.0, Vec3::zeros())]).is_err());
        assert!(DynamicObstacle::new(0.1, vec![(0.0, Vec3::zeros()), (0.0, Vec3::zeros())]).is_err());
    }

    #[test]
    fn trajectories_stay_inside_bounds() {
        let params = GeneratorParams::default();
        let bounds = params.bounds();
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 1);
            let wps = random_trajectory(&mut rng, &params, &bounds);
            assert_eq!(wps[0].0, 0.0);
            assert_eq!(wps.last().unwrap().0, params.t_max);
            for w in wps.windows(2) {
                assert!(w[1].0 > w[0].0);
                let speed = (w[1].1 - w[0].1).norm() / (w[1].0 - w[0].0);
                assert!(speed <= params.speed_range.1 + 1e-9, "speed {speed}");
            }
            for (_, p) in &wps {
                assert!(bounds.contains_point(p));
            }
        }
    }

    #[test]
    fn zero_obstacles() {
        let inst = generate_instance(3, 0, &GeneratorParams::default()).unwrap();
        assert!(inst.scene.dynamics.is_empty());
        assert!(inst.q_start.distance(&inst.q_goal) >= 1.0);
    }

    #[test]
    fn extend_by_zero_is_identity() {
        let params = GeneratorParams::default();
        let base = generate_instance(5, 3, &params).unwrap();
        assert_eq!(incremental_extend(&base, 0, &params).unwrap(), base);
    }

    #[test]
    fn exhausted_retries_is_an_error() {
        let mut params = GeneratorParams::default();
        // Obstacles as large as the arena can never avoid the robot.
        params.radius_range = (3.0, 3.0);
        params.max_attempts = 5;
        assert!(matches!(generate_instance(1, 1, &params), Err(Error::Generation(_))));
    }
}
