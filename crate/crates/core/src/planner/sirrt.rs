//! Bidirectional RRT over (configuration, safe interval) nodes.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::collision::{CollisionWorld, SafeIntervalSet};
use crate::geometry::Configuration;
use crate::scene::ProblemInstance;

use super::path::{PathSegment, TimedPath};
use super::timing::{earliest_arrival, earliest_arrival_before, latest_arrival};
use super::tree::{Direction, Node, Tree};
use super::{sample_configuration, PlanFailure, PlanOutcome, PlanStats, PlannerParams};

/// Leftover distance below which a step snaps onto its target. Stops
/// rounding from leaving a sub-ulp final move.
pub(crate) const SNAP: f64 = 1e-9;

/// Steps from the tree's nearest configuration towards `q_sampled` by at
/// most `delta_planner`. `None` if the step lands in static collision.
pub fn extend(
    world: &CollisionWorld,
    tree: &Tree,
    q_sampled: &Configuration,
    params: &PlannerParams,
) -> Option<Configuration> {
    let near = &tree.node(tree.nearest(q_sampled)?).q;
    steer(world, near, q_sampled, params.delta_planner)
}

fn steer(world: &CollisionWorld, from: &Configuration, towards: &Configuration, step: f64) -> Option<Configuration> {
    let dist = from.distance(towards);
    if dist == 0.0 {
        return None;
    }
    let q_new = if dist <= step + SNAP {
        towards.clone()
    } else {
        let mut q = from.lerp(towards, step / dist);
        world.scene.robot.clamp(&mut q.0);
        q
    };
    (!world.static_collision(&q_new)).then_some(q_new)
}

/// One node per safe interval of `q_new` that some tree node within
/// `delta_parent` can reach in time; nearest feasible parent wins.
pub fn set_parent(
    world: &CollisionWorld,
    tree: &Tree,
    q_new: &Configuration,
    intervals: &SafeIntervalSet,
    params: &PlannerParams,
) -> Vec<Node> {
    let candidates = tree.near(q_new, params.delta_parent);
    let mut out = Vec::new();
    for si in intervals.iter() {
        for &(id, _) in &candidates {
            let p = tree.node(id);
            let node = match tree.direction {
                Direction::Start => {
                    earliest_arrival(world, &p.q, &p.interval, p.time, q_new, si, params.v_max).map(|t| Node {
                        q: q_new.clone(),
                        interval: *si,
                        time: t.arrive,
                        parent: Some(id),
                        depart: t.depart,
                        arrive: t.arrive,
                    })
                }
                Direction::Goal => {
                    latest_arrival(world, q_new, si, &p.q, &p.interval, p.time, params.v_max).map(|t| Node {
                        q: q_new.clone(),
                        interval: *si,
                        time: t.depart,
                        parent: Some(id),
                        depart: t.depart,
                        arrive: t.arrive,
                    })
                }
            };
            if let Some(node) = node {
                out.push(node);
                break;
            }
        }
    }
    out
}

fn compatible(direction: Direction, other: &Node, target: &Node) -> bool {
    if other.interval.first_tick != target.interval.first_tick || other.interval.last_tick != target.interval.last_tick {
        return false;
    }
    match direction {
        // `other` is forward: arrive before the backward side must leave.
        Direction::Start => other.time <= target.time,
        Direction::Goal => target.time <= other.time,
    }
}

/// Greedily grows `other` towards `q_target`, where `target` just gained
/// the nodes `target_ids`. On reaching `q_target`, returns a pair of
/// (target node, other node) sharing a safe interval with compatible times.
/// Nodes added to `other` along the way are kept even on failure.
#[allow(clippy::too_many_arguments)]
pub fn connect(
    world: &CollisionWorld,
    other: &mut Tree,
    target: &Tree,
    target_ids: &[usize],
    q_target: &Configuration,
    params: &PlannerParams,
    stats: &mut PlanStats,
    deadline: Option<Instant>,
) -> Option<(usize, usize)> {
    let mut from = other.node(other.nearest(q_target)?).q.clone();
    loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return None;
        }
        let q_step = steer(world, &from, q_target, params.delta_planner)?;
        let reached = q_step == *q_target;
        let intervals = if reached {
            // Only intervals some target node sits in can produce a meet.
            SafeIntervalSet::from_intervals(target_ids.iter().map(|&i| target.node(i).interval).collect())
        } else {
            stats.interval_queries += 1;
            world.safe_intervals(&q_step)
        };
        let nodes = set_parent(world, other, &q_step, &intervals, params);
        if nodes.is_empty() {
            return None;
        }
        let ids: Vec<usize> = nodes.into_iter().map(|n| other.add(n)).collect();
        if reached {
            for &o in &ids {
                for &t in target_ids {
                    if compatible(other.direction, other.node(o), target.node(t)) {
                        return Some((t, o));
                    }
                }
            }
            return None;
        }
        from = q_step;
    }
}

/// Joins the start branch ending at `start_id` with the reversed goal branch
/// starting at `goal_id`. Both must sit at the same configuration and safe
/// interval, with the forward arrival no later than the backward departure.
pub fn unite_trees(start: &Tree, goal: &Tree, start_id: usize, goal_id: usize) -> TimedPath {
    let s = start.node(start_id);
    let g = goal.node(goal_id);
    let goal_side = goal.branch(goal_id);
    if goal_side.len() > 1 {
        assert_eq!(s.q, g.q, "meeting nodes must share a configuration");
        assert!(
            s.interval == g.interval && s.time <= g.time,
            "incompatible meet: arrive {} / depart {}",
            s.time,
            g.time
        );
    }

    let mut segments: Vec<PathSegment> = Vec::new();
    for id in start.branch(start_id).into_iter().rev() {
        let n = start.node(id);
        if let Some(prev) = segments.last_mut() {
            prev.wait_until = n.depart;
        }
        let (depart, arrive) = if n.parent.is_some() { (n.depart, n.arrive) } else { (0.0, 0.0) };
        segments.push(PathSegment { q: n.q.clone(), wait_until: arrive, depart, arrive });
    }
    let meet = segments.len() - 1;
    for pair in goal_side.windows(2) {
        let child = goal.node(pair[0]);
        let parent = goal.node(pair[1]);
        segments.last_mut().unwrap().wait_until = child.depart;
        segments.push(PathSegment {
            q: parent.q.clone(),
            wait_until: child.arrive,
            depart: child.depart,
            arrive: child.arrive,
        });
    }
    let t_arrival = segments.last().unwrap().arrive;
    TimedPath { segments, t_arrival, meet: Some(meet) }
}

/// Re-times everything after the meet waypoint to leave as early as the
/// safe intervals allow. Never delays any arrival; falls back to the input
/// timing for a leg when nothing earlier is feasible.
pub fn trim_wait(world: &CollisionWorld, path: &TimedPath, v_max: f64) -> TimedPath {
    let m = path.meet.unwrap_or(0);
    let n = path.segments.len();
    if m + 1 >= n {
        return path.clone();
    }
    let mut intervals = Vec::with_capacity(n - m);
    for seg in &path.segments[m..] {
        match world.safe_intervals(&seg.q).containing(seg.arrive) {
            Some(si) => intervals.push(*si),
            None => return path.clone(),
        }
    }
    let mut out = path.clone();
    let mut now = out.segments[m].arrive;
    for i in m..n - 1 {
        let (old_depart, old_arrive) = (path.segments[i + 1].depart, path.segments[i + 1].arrive);
        let (q_from, q_to) = (&path.segments[i].q, &path.segments[i + 1].q);
        let (depart, arrive) = match earliest_arrival_before(
            world,
            q_from,
            &intervals[i - m],
            now,
            q_to,
            &intervals[i + 1 - m],
            v_max,
            old_depart,
        ) {
            Some(t) if t.depart < old_depart && t.arrive <= old_arrive => (t.depart, t.arrive),
            _ => (old_depart, old_arrive),
        };
        out.segments[i].wait_until = depart;
        out.segments[i + 1].depart = depart;
        out.segments[i + 1].arrive = arrive;
        now = arrive;
    }
    let last = out.segments.last_mut().unwrap();
    last.wait_until = last.arrive;
    out.t_arrival = last.arrive;
    out
}

/// Roots of both trees, or the reason the instance is hopeless.
fn roots(world: &CollisionWorld, instance: &ProblemInstance, stats: &mut PlanStats) -> Result<(Node, Node), PlanFailure> {
    let grid = world.grid();
    stats.interval_queries += 2;
    let start_set = world.safe_intervals(&instance.q_start);
    let start_si = *start_set.first().filter(|si| si.first_tick == 0).ok_or(PlanFailure::StartBlocked)?;
    let goal_set = world.safe_intervals(&instance.q_goal);
    let goal_si = *goal_set.last().filter(|si| si.last_tick == grid.last_tick()).ok_or(PlanFailure::GoalBlocked)?;
    Ok((
        Node::root(instance.q_start.clone(), start_si, 0.0),
        Node::root(instance.q_goal.clone(), goal_si, goal_si.end),
    ))
}

/// Runs the planner on a prepared world.
pub fn plan_in_world(world: &CollisionWorld, instance: &ProblemInstance, params: &PlannerParams, started: Instant) -> PlanOutcome {
    let mut stats = PlanStats::default();
    let (start_root, goal_root) = match roots(world, instance, &mut stats) {
        Ok(r) => r,
        Err(f) => return PlanOutcome::failed(f, stats, started),
    };
    if instance.q_start == instance.q_goal {
        let path = TimedPath::stationary(instance.q_start.clone());
        return PlanOutcome::solved(path.clone(), path, stats, started);
    }

    let deadline = started + std::time::Duration::from_secs_f64(params.time_budget);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut trees = [Tree::new(Direction::Start, start_root), Tree::new(Direction::Goal, goal_root)];
    let mut cur = 0;
    let robot = &world.scene.robot;

    loop {
        stats.start_nodes = trees[0].len();
        stats.goal_nodes = trees[1].len();
        if Instant::now() >= deadline || params.max_iterations.is_some_and(|m| stats.iterations >= m) {
            return PlanOutcome::failed(PlanFailure::Budget, stats, started);
        }
        stats.iterations += 1;

        let q_sampled = sample_configuration(&mut rng, robot);
        let [a, b] = &mut trees;
        let (current, other) = if cur == 0 { (a, b) } else { (b, a) };

        let Some(q_new) = extend(world, current, &q_sampled, params) else {
            cur ^= 1;
            continue;
        };
        stats.interval_queries += 1;
        let intervals = world.safe_intervals(&q_new);
        let nodes = set_parent(world, current, &q_new, &intervals, params);
        if nodes.is_empty() {
            cur ^= 1;
            continue;
        }
        let ids: Vec<usize> = nodes.into_iter().map(|n| current.add(n)).collect();

        if let Some((target_id, other_id)) =
            connect(world, other, current, &ids, &q_new, params, &mut stats, Some(deadline))
        {
            let (s, g) = if cur == 0 { (target_id, other_id) } else { (other_id, target_id) };
            stats.start_nodes = trees[0].len();
            stats.goal_nodes = trees[1].len();
            let raw = unite_trees(&trees[0], &trees[1], s, g);
            let path = if params.trim { trim_wait(world, &raw, params.v_max) } else { raw.clone() };
            return PlanOutcome::solved(path, raw, stats, started);
        }
        cur ^= 1;
    }
}

/// Plans a timed path for `instance`. The timed index is built first and
/// its cost is part of the reported runtime.
pub fn plan(instance: &ProblemInstance, params: &PlannerParams) -> PlanOutcome {
    let started = Instant::now();
    if let Err(e) = instance.check() {
        return PlanOutcome::failed(PlanFailure::InvalidInstance(e.to_string()), PlanStats::default(), started);
    }
    let world = CollisionWorld::new(&instance.scene);
    let build = started.elapsed().as_secs_f64();
    let mut out = plan_in_world(&world, instance, params, started);
    out.stats.index_build_s = build;
    out
}
