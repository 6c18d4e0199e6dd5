//! Wait-and-go timing between two configurations' safe intervals.
//!
//! Departures are scanned in order: first "leave right away" (or "arrive
//! exactly on time" when searching backwards), then every grid tick. The
//! first departure whose move is collision-free and lands inside the target
//! interval wins.

use crate::collision::{CollisionWorld, SafeInterval};
use crate::geometry::Configuration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub depart: f64,
    pub arrive: f64,
}

pub fn travel_duration(from: &Configuration, to: &Configuration, v_max: f64) -> f64 {
    from.distance(to) / v_max
}

/// Earliest collision-free arrival at `q_to` (inside `to_interval`) for a
/// robot standing at `q_to`'s predecessor `q_from` from `from_time` on.
pub fn earliest_arrival(
    world: &CollisionWorld,
    q_from: &Configuration,
    from_interval: &SafeInterval,
    from_time: f64,
    q_to: &Configuration,
    to_interval: &SafeInterval,
    v_max: f64,
) -> Option<Timing> {
    earliest_arrival_before(world, q_from, from_interval, from_time, q_to, to_interval, v_max, f64::INFINITY)
}

/// [`earliest_arrival`] restricted to departures `<= max_depart`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn earliest_arrival_before(
    world: &CollisionWorld,
    q_from: &Configuration,
    from_interval: &SafeInterval,
    from_time: f64,
    q_to: &Configuration,
    to_interval: &SafeInterval,
    v_max: f64,
    max_depart: f64,
) -> Option<Timing> {
    let grid = world.grid();
    let duration = travel_duration(q_from, q_to, v_max);
    let latest = from_interval.end.min(to_interval.end - duration).min(max_depart);
    if from_time > latest {
        return None;
    }
    let try_depart = |depart: f64| -> Option<Timing> {
        let arrive = depart + duration;
        if arrive < to_interval.start || arrive > to_interval.end {
            return None;
        }
        (!world.motion_collides(q_from, q_to, depart, arrive)).then_some(Timing { depart, arrive })
    };
    if let Some(t) = try_depart(from_time) {
        return Some(t);
    }
    // Departing before this can never land inside the target interval.
    let lower = from_time.max(to_interval.start - duration);
    let first = grid.tick_at_or_after(lower)?;
    let last = grid.tick_at_or_before(latest)?;
    (first..=last)
        .map(|k| grid.time(k))
        .filter(|&d| d > from_time)
        .find_map(try_depart)
}

/// Latest collision-free departure from `q_from` (inside `from_interval`)
/// that reaches `q_to` no later than `to_time`, arriving inside
/// `to_interval`. Mirror image of [`earliest_arrival`].
pub fn latest_arrival(
    world: &CollisionWorld,
    q_from: &Configuration,
    from_interval: &SafeInterval,
    q_to: &Configuration,
    to_interval: &SafeInterval,
    to_time: f64,
    v_max: f64,
) -> Option<Timing> {
    let grid = world.grid();
    let duration = travel_duration(q_from, q_to, v_max);
    let to_time = to_time.min(to_interval.end);
    let try_depart = |depart: f64, arrive: f64| -> Option<Timing> {
        if depart < from_interval.start || depart > from_interval.end || arrive < to_interval.start {
            return None;
        }
        (!world.motion_collides(q_from, q_to, depart, arrive)).then_some(Timing { depart, arrive })
    };
    // Arrive exactly at `to_time`; pin the arrival so it never drifts past it.
    let on_time = to_time - duration;
    if let Some(t) = try_depart(on_time, to_time) {
        return Some(t);
    }
    let upper = on_time.min(from_interval.end);
    let lower = from_interval.start.max(to_interval.start - duration);
    let hi = grid.tick_at_or_before(upper)?;
    let lo = grid.tick_at_or_after(lower)?;
    if lo > hi {
        return None;
    }
    (lo..=hi)
        .rev()
        .map(|k| grid.time(k))
        .filter(|&d| d < on_time && d + duration <= to_time)
        .find_map(|d| try_depart(d, d + duration))
}
