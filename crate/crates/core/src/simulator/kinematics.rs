use crate::error::{Error, Result};
use crate::geo::distance_m;

/// Acceleration and braking rate, m/s².
pub const ACCELERATION: f64 = 1.0;

/// Straight-line interpolation along waypoints, parameterized by meters.
#[derive(Debug, Clone)]
pub(crate) struct Polyline {
    points: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<(f64, f64)>) -> Self {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                let q = points[i - 1];
                total += distance_m(q.0, q.1, p.0, p.1);
            }
            cumulative.push(total);
        }
        Self { points, cumulative }
    }

    pub fn distance_to(&self, waypoint: usize) -> f64 {
        self.cumulative[waypoint]
    }

    /// Position `d` meters from the start, clamped to the ends.
    pub fn at(&self, d: f64) -> (f64, f64) {
        let last = self.points.len() - 1;
        if d <= 0.0 {
            return self.points[0];
        }
        if d >= self.cumulative[last] {
            return self.points[last];
        }
        let i = self.cumulative.partition_point(|&c| c <= d).max(1) - 1;
        let span = self.cumulative[i + 1] - self.cumulative[i];
        let f = if span > 0.0 { (d - self.cumulative[i]) / span } else { 0.0 };
        let (a, b) = (self.points[i], self.points[i + 1]);
        (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1))
    }
}

/// Trapezoidal speed profile over one stop-to-stop leg, starting and ending at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Leg {
    pub length: f64,
    peak: f64,
    ramp: f64,
    pub duration: f64,
}

impl Leg {
    pub fn new(length: f64, cruise_ms: f64) -> Self {
        let full_ramp = cruise_ms * cruise_ms / ACCELERATION;
        let (peak, duration) = if length >= full_ramp {
            (cruise_ms, 2.0 * cruise_ms / ACCELERATION + (length - full_ramp) / cruise_ms)
        } else {
            let peak = (ACCELERATION * length).sqrt();
            (peak, 2.0 * peak / ACCELERATION)
        };
        Self { length, peak, ramp: peak / ACCELERATION, duration }
    }

    /// Distance covered and speed (m/s) `t` seconds after departure.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, self.duration);
        if t < self.ramp {
            (0.5 * ACCELERATION * t * t, ACCELERATION * t)
        } else if t <= self.duration - self.ramp {
            (0.5 * self.peak * self.ramp + self.peak * (t - self.ramp), self.peak)
        } else {
            let left = self.duration - t;
            (self.length - 0.5 * ACCELERATION * left * left, ACCELERATION * left)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Motion {
    /// Standing at the `n`-th stop of the plan.
    Dwell(usize),
    Moving {
        lat: f64,
        lon: f64,
        speed_ms: f64,
    },
}

/// One terminal-to-terminal traversal: legs between consecutive stops with a
/// dwell at every intermediate stop.
#[derive(Debug, Clone)]
pub(crate) struct TripPlan {
    path: Polyline,
    stop_waypoints: Vec<usize>,
    legs: Vec<Leg>,
    /// Departure offset of each leg.
    departures: Vec<f64>,
    dwell_s: f64,
    pub duration: f64,
}

impl TripPlan {
    pub fn new(waypoints: Vec<(f64, f64)>, stop_waypoints: Vec<usize>, speed_kmh: f64, dwell_s: f64) -> Result<Self> {
        let path = Polyline::new(waypoints);
        let cruise = speed_kmh / 3.6;
        let mut legs = Vec::new();
        let mut departures = Vec::new();
        let mut t = 0.0;
        for w in stop_waypoints.windows(2) {
            let length = path.distance_to(w[1]) - path.distance_to(w[0]);
            if length < 1.0 {
                return Err(Error::invalid("route script", format!("stops at waypoints {} and {} are less than 1 m apart", w[0], w[1])));
            }
            let leg = Leg::new(length, cruise);
            departures.push(t);
            t += leg.duration + dwell_s;
            legs.push(leg);
        }
        let duration = t - dwell_s;
        Ok(Self { path, stop_waypoints, legs, departures, dwell_s, duration })
    }

    pub fn stop_count(&self) -> usize {
        self.stop_waypoints.len()
    }

    /// Offset of the departure from the first stop (0) and of the arrival at every later stop.
    pub fn pass_offsets(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.legs.iter().zip(&self.departures).map(|(l, d)| d + l.duration)).collect()
    }

    pub fn motion(&self, t: f64) -> Motion {
        if t <= 0.0 {
            return Motion::Dwell(0);
        }
        if t >= self.duration {
            return Motion::Dwell(self.stop_count() - 1);
        }
        let i = self.departures.partition_point(|&d| d <= t) - 1;
        let into = t - self.departures[i];
        let leg = &self.legs[i];
        if into >= leg.duration {
            debug_assert!(into <= leg.duration + self.dwell_s);
            return Motion::Dwell(i + 1);
        }
        let (covered, speed_ms) = leg.at(into);
        let (lat, lon) = self.path.at(self.path.distance_to(self.stop_waypoints[i]) + covered);
        Motion::Moving { lat, lon, speed_ms }
    }
}
