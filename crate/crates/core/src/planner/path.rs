use serde::{Deserialize, Serialize};

use crate::collision::interpolate_motion;
use crate::geometry::Configuration;

/// One waypoint of a timed path.
///
/// The robot leaves the previous waypoint at `depart`, reaches `q` at
/// `arrive` moving at constant velocity, and stays at `q` until
/// `wait_until`. The first waypoint has `depart == arrive == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSegment {
    pub q: Configuration,
    pub wait_until: f64,
    pub depart: f64,
    pub arrive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedPath {
    pub segments: Vec<PathSegment>,
    pub t_arrival: f64,
    /// Waypoint where the forward and backward trees met, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meet: Option<usize>,
}

impl TimedPath {
    /// Robot stays put at `q`; arrival at time 0.
    pub fn stationary(q: Configuration) -> Self {
        Self {
            segments: vec![PathSegment { q, wait_until: 0.0, depart: 0.0, arrive: 0.0 }],
            t_arrival: 0.0,
            meet: Some(0),
        }
    }

    pub fn start(&self) -> &Configuration {
        &self.segments[0].q
    }

    pub fn goal(&self) -> &Configuration {
        &self.segments.last().expect("path has waypoints").q
    }

    /// Configuration at time `t`, clamped to `[0, t_arrival]`.
    pub fn configuration_at(&self, t: f64) -> Configuration {
        let segs = &self.segments;
        for i in 1..segs.len() {
            let s = &segs[i];
            if t < s.depart {
                return segs[i - 1].q.clone();
            }
            if t <= s.arrive {
                return interpolate_motion(&segs[i - 1].q, &s.q, s.depart, s.arrive, t);
            }
        }
        segs.last().unwrap().q.clone()
    }

    /// Total waiting time at interior waypoints.
    pub fn interior_wait(&self) -> f64 {
        let n = self.segments.len();
        if n < 3 {
            return 0.0;
        }
        self.segments[1..n - 1].iter().map(|s| s.wait_until - s.arrive).sum()
    }

    pub fn meet_wait(&self) -> f64 {
        self.meet
            .and_then(|m| self.segments.get(m))
            .filter(|_| self.meet != Some(self.segments.len() - 1))
            .map(|s| s.wait_until - s.arrive)
            .unwrap_or(0.0)
    }

    pub fn length(&self) -> f64 {
        self.segments.windows(2).map(|w| w[0].q.distance(&w[1].q)).sum()
    }
}
