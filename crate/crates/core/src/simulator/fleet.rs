use std::collections::HashMap;

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::kinematics::{Motion, TripPlan};
use super::script::SimConfig;
use super::truth::{Glitch, GroundTruth, RecordTruth};
use crate::domain::{BusStop, GpsRecord, Route, ServiceLabel, StopPass, Timestamp, Trip};
use crate::error::Result;
use crate::geo::{distance_m, offset};

/// Reported speed range (km/h) while standing at a stop.
pub const DWELL_SPEED_KMH: (f64, f64) = (0.2, 1.0);

/// First simulated unit id; buses are numbered consecutively.
pub const FIRST_UNIT_ID: u64 = 100_001;

/// Noise is redrawn until it falls within this many sigmas of the true position.
const NOISE_TRUNCATION: f64 = 3.0;

struct Direction {
    plan: TripPlan,
    /// Global stop index of each plan stop.
    stops: Vec<usize>,
    route_id: String,
}

enum Phase {
    Idle { stop: usize },
    Trip { direction: usize },
}

struct Span {
    start: f64,
    end: f64,
    phase: Phase,
}

/// Generate a fleet's record stream and the exact network behind it.
///
/// Records come out ordered by `(unit_id, timestamp)`; duplicate glitches
/// immediately follow the row they copy.
pub fn simulate(cfg: &SimConfig) -> Result<(Vec<GpsRecord>, GroundTruth)> {
    cfg.validate()?;
    let mut truth = GroundTruth::default();
    let mut stop_index: HashMap<(u64, u64), usize> = HashMap::new();

    let mut route_dirs: Vec<Vec<Direction>> = Vec::new();
    for (r, script) in cfg.routes.iter().enumerate() {
        let mut global = Vec::new();
        for (n, &w) in script.stop_indices.iter().enumerate() {
            let (lat, lon) = script.waypoints[w];
            let next = truth.stops.len();
            let id = *stop_index.entry((lat.to_bits(), lon.to_bits())).or_insert(next);
            if id == next {
                truth.stops.push(BusStop::new(format!("G{}", next + 1), format!("{} {}", script.name, n + 1), lat, lon)?);
            }
            global.push(id);
        }
        let mut dirs = vec![Direction {
            plan: TripPlan::new(script.waypoints.clone(), script.stop_indices.clone(), script.speed_kmh, script.dwell_s)?,
            stops: global.clone(),
            route_id: if script.is_loop() { format!("R{}", r + 1) } else { format!("R{}A", r + 1) },
        }];
        if !script.is_loop() {
            let last = script.waypoints.len() - 1;
            let waypoints = script.waypoints.iter().rev().copied().collect();
            let stops = script.stop_indices.iter().rev().map(|&i| last - i).collect();
            dirs.push(Direction {
                plan: TripPlan::new(waypoints, stops, script.speed_kmh, script.dwell_s)?,
                stops: global.iter().rev().copied().collect(),
                route_id: format!("R{}B", r + 1),
            });
        }
        route_dirs.push(dirs);
    }

    let interval = f64::from(cfg.report_interval_s);
    let ticks = cfg.ticks();
    let horizon = ticks as f64 * interval;
    let noise = Normal::new(0.0, cfg.gps_noise_sigma_m.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let displaced_m = 2.0 * NOISE_TRUNCATION * cfg.gps_noise_sigma_m + 5.0;

    let mut records = Vec::with_capacity(ticks * cfg.buses_per_route.iter().sum::<usize>());
    let mut route_trips: Vec<Vec<Vec<String>>> = route_dirs.iter().map(|d| vec![Vec::new(); d.len()]).collect();
    let mut bus = 0u64;
    for (r, dirs) in route_dirs.iter().enumerate() {
        let script = &cfg.routes[r];
        let fleet = cfg.buses_per_route[r];
        let cycle = dirs.iter().map(|d| d.plan.duration + script.layover_s).sum::<f64>() / dirs.len() as f64;
        for b in 0..fleet {
            let unit = (FIRST_UNIT_ID + bus).to_string();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(bus + 1);
            bus += 1;

            let spans = schedule(dirs, b as f64 * cycle / fleet as f64, script.layover_s, horizon);
            for span in &spans {
                if let Phase::Trip { direction } = span.phase {
                    let dir = &dirs[direction];
                    let stops = dir
                        .plan
                        .pass_offsets()
                        .into_iter()
                        .zip(&dir.stops)
                        .map(|(t, &s)| StopPass { stop_id: truth.stops[s].stop_id.clone(), time: at(cfg.start, span.start + t) })
                        .collect::<Vec<_>>();
                    let trip_id = format!("GT{}", truth.trips.len() + 1);
                    let service = ServiceLabel::for_date(stops[0].time.date());
                    route_trips[r][direction].push(trip_id.clone());
                    truth.trips.push(Trip { trip_id, unit_id: unit.clone(), stops, service });
                }
            }

            let mut span_i = 0;
            let mut previous: Option<(f64, f64)> = None;
            for tick in 0..ticks {
                let t = tick as f64 * interval;
                while spans[span_i].end <= t && span_i + 1 < spans.len() {
                    span_i += 1;
                }
                let span = &spans[span_i];
                let (lat, lon, speed, dwell_stop) = match span.phase {
                    Phase::Idle { stop } => standing(&truth.stops[stop], stop, &mut rng),
                    Phase::Trip { direction } => match dirs[direction].plan.motion(t - span.start) {
                        Motion::Dwell(n) => {
                            let stop = dirs[direction].stops[n];
                            standing(&truth.stops[stop], stop, &mut rng)
                        }
                        Motion::Moving { lat, lon, speed_ms } => (lat, lon, (speed_ms * 3.6).max(DWELL_SPEED_KMH.0), None),
                    },
                };
                let (mut noisy_lat, mut noisy_lon) = (lat, lon);
                if cfg.gps_noise_sigma_m > 0.0 {
                    let (east, north) = loop {
                        let (e, n) = (noise.sample(&mut rng), noise.sample(&mut rng));
                        if e.hypot(n) <= NOISE_TRUNCATION * cfg.gps_noise_sigma_m {
                            break (e, n);
                        }
                    };
                    (noisy_lat, noisy_lon) = offset(lat, lon, east, north);
                }
                let glitch_draw: f64 = rng.random();
                let duplicate_draw: f64 = rng.random();
                let displaced = previous.is_some_and(|(plat, plon)| distance_m(plat, plon, lat, lon) > displaced_m);
                previous = Some((lat, lon));

                let mut glitch = Glitch::None;
                let mut reported_speed = speed;
                if dwell_stop.is_none() && displaced && glitch_draw < cfg.zero_speed_rate {
                    glitch = Glitch::ZeroSpeed;
                    reported_speed = 0.0;
                }
                let record = GpsRecord::new(noisy_lat, noisy_lon, reported_speed, unit.clone(), at(cfg.start, t))?;
                let tags = RecordTruth { glitch, dwell_stop };
                if duplicate_draw < cfg.duplicate_rate {
                    records.push(record.clone());
                    truth.records.push(tags);
                    records.push(record);
                    truth.records.push(RecordTruth { glitch: Glitch::Duplicate, dwell_stop });
                } else {
                    records.push(record);
                    truth.records.push(tags);
                }
            }
        }
    }

    for (r, dirs) in route_dirs.iter().enumerate() {
        for (d, dir) in dirs.iter().enumerate() {
            let trip_ids = std::mem::take(&mut route_trips[r][d]);
            if trip_ids.is_empty() {
                continue;
            }
            let stop_ids: Vec<String> = dir.stops.iter().map(|&s| truth.stops[s].stop_id.clone()).collect();
            let long_name = format!("{} - {}", truth.stops[dir.stops[0]].name, truth.stops[*dir.stops.last().expect("stops")].name);
            let short_name = (truth.routes.len() + 1).to_string();
            truth.routes.push(Route { route_id: dir.route_id.clone(), stop_ids, short_name, long_name, trip_ids });
        }
    }
    Ok((records, truth))
}

fn at(start: Timestamp, offset_s: f64) -> Timestamp {
    start + Duration::seconds(offset_s.round() as i64)
}

fn standing(stop: &BusStop, index: usize, rng: &mut ChaCha8Rng) -> (f64, f64, f64, Option<usize>) {
    let speed = rng.random_range(DWELL_SPEED_KMH.0..DWELL_SPEED_KMH.1);
    (stop.latitude, stop.longitude, speed, Some(index))
}

/// Lay out a bus's day: wait at the first terminal until `offset`, then run
/// complete trips separated by layovers. A trip that would not finish
/// before `horizon` is not started.
fn schedule(dirs: &[Direction], offset: f64, layover: f64, horizon: f64) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut t = 0.0;
    let mut direction = 0;
    let mut here = dirs[0].stops[0];
    if offset > 0.0 {
        spans.push(Span { start: 0.0, end: offset.min(horizon), phase: Phase::Idle { stop: here } });
        t = offset;
    }
    while t < horizon {
        let plan = &dirs[direction].plan;
        if t + plan.duration > horizon {
            spans.push(Span { start: t, end: horizon, phase: Phase::Idle { stop: here } });
            break;
        }
        spans.push(Span { start: t, end: t + plan.duration, phase: Phase::Trip { direction } });
        t += plan.duration;
        here = *dirs[direction].stops.last().expect("stops");
        direction = (direction + 1) % dirs.len();
        let end = (t + layover).min(horizon);
        if end > t {
            spans.push(Span { start: t, end, phase: Phase::Idle { stop: here } });
        }
        t = end;
    }
    if spans.is_empty() {
        spans.push(Span { start: 0.0, end: horizon, phase: Phase::Idle { stop: here } });
    }
    spans
}
