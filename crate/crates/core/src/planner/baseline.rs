//! Space-time RRT-Connect: nodes are explicit (configuration, time) states
//! and every edge is checked tick by tick, with no interval reasoning.
//! Goal states are sampled at times below a horizon that starts at twice the
//! kinematic lower bound and doubles after every batch of iterations without
//! a solution. Exists as a point of comparison for the safe-interval planner.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collision::CollisionWorld;
use crate::geometry::Configuration;
use crate::scene::ProblemInstance;

use super::path::{PathSegment, TimedPath};
use super::{sample_configuration, PlanFailure, PlanOutcome, PlanStats, PlannerParams};

/// Iterations between horizon expansions.
const BATCH: u64 = 100;
/// Chance per iteration of adding a goal state.
const GOAL_SAMPLE_RATE: f64 = 0.05;

#[derive(Debug, Clone)]
struct State {
    q: Configuration,
    t: f64,
    parent: Option<usize>,
}

struct StTree {
    forward: bool,
    states: Vec<State>,
}

impl StTree {
    /// Closest state (joint distance plus scaled time gap) that can reach,
    /// or be reached from, `(q, t)` within the speed limit.
    fn nearest(&self, q: &Configuration, t: f64, v_max: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in self.states.iter().enumerate() {
            let dq = s.q.distance(q);
            let dt = if self.forward { t - s.t } else { s.t - t };
            if dt < dq / v_max {
                continue;
            }
            let d = dq * dq + (v_max * dt) * (v_max * dt);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }

    fn branch(&self, id: usize) -> Vec<usize> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.states[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }
}

/// Wait at `a` then move at full speed, arriving at `b` exactly at `tb`.
fn edge_timing(a: &Configuration, b: &Configuration, tb: f64, v_max: f64) -> (f64, f64) {
    (tb - a.distance(b) / v_max, tb)
}

fn edge_free(world: &CollisionWorld, a: &Configuration, ta: f64, b: &Configuration, tb: f64, v_max: f64) -> bool {
    let grid = world.grid();
    let (depart, arrive) = edge_timing(a, b, tb, v_max);
    if depart < ta {
        return false;
    }
    if world.config_collides(a, ta, grid.exact_tick(ta)) {
        return false;
    }
    if let (Some(lo), Some(hi)) = (grid.tick_at_or_after(ta), grid.tick_at_or_before(depart)) {
        if (lo..=hi).any(|k| world.config_collides(a, grid.time(k), Some(k))) {
            return false;
        }
    }
    !world.motion_collides(a, b, depart, arrive)
}

/// Whether the robot can sit at `q` from `t` until the end of the grid.
fn goal_safe_from(world: &CollisionWorld, q: &Configuration, t: f64) -> bool {
    let grid = world.grid();
    if world.config_collides(q, t, grid.exact_tick(t)) {
        return false;
    }
    match grid.tick_at_or_after(t) {
        Some(lo) => !(lo..grid.tick_count()).any(|k| world.config_collides(q, grid.time(k), Some(k))),
        None => true,
    }
}

/// Steps from state `from` towards `(q, t)` by at most `step` in joint space,
/// keeping the time proportional.
fn steer(from: &State, q: &Configuration, t: f64, step: f64) -> (Configuration, f64, bool) {
    let d = from.q.distance(q);
    if d <= step + super::sirrt::SNAP {
        return (q.clone(), t, true);
    }
    let s = step / d;
    (from.q.lerp(q, s), from.t + (t - from.t) * s, false)
}

fn build_path(start: &StTree, goal: &StTree, s: usize, g: usize, v_max: f64) -> TimedPath {
    let mut states: Vec<&State> = start.branch(s).into_iter().rev().map(|i| &start.states[i]).collect();
    states.extend(goal.branch(g).into_iter().skip(1).map(|i| &goal.states[i]));
    let mut segments: Vec<PathSegment> = vec![PathSegment {
        q: states[0].q.clone(),
        wait_until: 0.0,
        depart: 0.0,
        arrive: 0.0,
    }];
    let meet = start.branch(s).len() - 1;
    for pair in states.windows(2) {
        let (depart, arrive) = edge_timing(&pair[0].q, &pair[1].q, pair[1].t, v_max);
        segments.last_mut().unwrap().wait_until = depart;
        segments.push(PathSegment { q: pair[1].q.clone(), wait_until: arrive, depart, arrive });
    }
    let t_arrival = segments.last().unwrap().arrive;
    TimedPath { segments, t_arrival, meet: Some(meet) }
}

pub fn plan_baseline_st(instance: &ProblemInstance, params: &PlannerParams) -> PlanOutcome {
    let started = Instant::now();
    let mut stats = PlanStats::default();
    if let Err(e) = instance.check() {
        return PlanOutcome::failed(PlanFailure::InvalidInstance(e.to_string()), stats, started);
    }
    let world = CollisionWorld::new(&instance.scene);
    stats.index_build_s = started.elapsed().as_secs_f64();
    let grid = *world.grid();
    let t_end = grid.time(grid.last_tick());
    let v_max = params.v_max;

    if world.config_collides(&instance.q_start, 0.0, Some(0)) {
        return PlanOutcome::failed(PlanFailure::StartBlocked, stats, started);
    }
    if world.config_collides(&instance.q_goal, t_end, Some(grid.last_tick())) {
        return PlanOutcome::failed(PlanFailure::GoalBlocked, stats, started);
    }
    if instance.q_start == instance.q_goal {
        let path = TimedPath::stationary(instance.q_start.clone());
        return PlanOutcome::solved(path.clone(), path, stats, started);
    }

    let deadline = started + Duration::from_secs_f64(params.time_budget);
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let t_min = instance.q_start.distance(&instance.q_goal) / v_max;
    if t_min > t_end {
        return PlanOutcome::failed(PlanFailure::Budget, stats, started);
    }
    let mut horizon = (2.0 * t_min).min(t_end);
    let mut trees = [
        StTree { forward: true, states: vec![State { q: instance.q_start.clone(), t: 0.0, parent: None }] },
        StTree { forward: false, states: Vec::new() },
    ];
    let mut cur = 0;
    let robot = &instance.scene.robot;

    loop {
        stats.start_nodes = trees[0].states.len();
        stats.goal_nodes = trees[1].states.len();
        if Instant::now() >= deadline || params.max_iterations.is_some_and(|m| stats.iterations >= m) {
            return PlanOutcome::failed(PlanFailure::Budget, stats, started);
        }
        if stats.iterations > 0 && stats.iterations % BATCH == 0 {
            horizon = (2.0 * horizon).min(t_end);
        }
        stats.iterations += 1;

        if trees[1].states.is_empty() || rng.random::<f64>() < GOAL_SAMPLE_RATE {
            let t_goal = if trees[1].states.is_empty() { horizon } else { rng.random_range(t_min..=horizon) };
            if goal_safe_from(&world, &instance.q_goal, t_goal) {
                trees[1].states.push(State { q: instance.q_goal.clone(), t: t_goal, parent: None });
            }
        }

        let q_sampled = sample_configuration(&mut rng, robot);
        let t_sampled = rng.random_range(0.0..=horizon);
        let [a, b] = &mut trees;
        let (current, other) = if cur == 0 { (a, b) } else { (b, a) };
        cur ^= 1;

        let Some(near) = current.nearest(&q_sampled, t_sampled, v_max) else { continue };
        let (q_new, t_new, _) = steer(&current.states[near], &q_sampled, t_sampled, params.delta_planner);
        if world.static_collision(&q_new) {
            continue;
        }
        let from = &current.states[near];
        let ok = if current.forward {
            edge_free(&world, &from.q, from.t, &q_new, t_new, v_max)
        } else {
            edge_free(&world, &q_new, t_new, &from.q, from.t, v_max)
        };
        if !ok {
            continue;
        }
        current.states.push(State { q: q_new.clone(), t: t_new, parent: Some(near) });
        let target_id = current.states.len() - 1;

        // Greedy connect of the other tree towards the new state.
        let Some(mut last) = other.nearest(&q_new, t_new, v_max) else { continue };
        loop {
            if Instant::now() >= deadline {
                break;
            }
            let from = &other.states[last];
            let (q_step, t_step, reached) = steer(from, &q_new, t_new, params.delta_planner);
            if world.static_collision(&q_step) {
                break;
            }
            let ok = if other.forward {
                edge_free(&world, &from.q, from.t, &q_step, t_step, v_max)
            } else {
                edge_free(&world, &q_step, t_step, &from.q, from.t, v_max)
            };
            if !ok {
                break;
            }
            other.states.push(State { q: q_step, t: t_step, parent: Some(last) });
            last = other.states.len() - 1;
            if reached {
                let (s, g) = if current.forward { (target_id, last) } else { (last, target_id) };
                let path = build_path(&trees[0], &trees[1], s, g, v_max);
                stats.start_nodes = trees[0].states.len();
                stats.goal_nodes = trees[1].states.len();
                return PlanOutcome::solved(path.clone(), path, stats, started);
            }
        }
    }
}
