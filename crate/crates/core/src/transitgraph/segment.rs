use super::cluster::{nearest_cluster, StopCluster};
use crate::domain::{GpsRecord, ServiceLabel, StopPass, Trip};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    /// A record within this distance of a stop centroid is "at" the stop.
    pub stop_radius_m: f64,
    /// Minimum stationary time at one stop that ends a trip.
    pub dwell_threshold_s: i64,
    /// Below this speed (km/h) a unit counts as stationary.
    pub dwell_speed_kmh: f64,
    /// A silence longer than this also ends a trip.
    pub max_gap_s: i64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { stop_radius_m: 25.0, dwell_threshold_s: 60, dwell_speed_kmh: 3.0, max_gap_s: 120 }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stop_radius_m.is_nan()
            || self.stop_radius_m <= 0.0
            || self.dwell_threshold_s <= 0
            || self.max_gap_s <= 0
            || self.dwell_speed_kmh.is_nan()
            || self.dwell_speed_kmh <= 0.0
        {
            return Err(Error::invalid("segmentation config", "radius, dwell threshold, dwell speed and max gap must be positive"));
        }
        Ok(())
    }
}

/// Cut each unit's trace into trips.
///
/// A trip ends when the unit stands at one stop for at least the dwell
/// threshold, or when its reports stop for longer than the maximum gap. The
/// dwell belongs to neither side: the earlier trip closes on the record that
/// starts it and the next trip opens on the record that ends it. Each trip
/// lists the stops it enters, in order, with the entry time; a stop re-entered
/// right after itself is listed once. Segments visiting fewer than two stops
/// are dropped. With `terminal_stops` given, only dwells at those stops cut.
///
/// `trace` must be ordered by `(unit_id, timestamp)`. Trip ids are `T1, T2, ...`.
pub fn segment_trips(trace: &[GpsRecord], stops: &[StopCluster], cfg: &SegmentConfig, terminal_stops: Option<&[String]>) -> Result<Vec<Trip>> {
    cfg.validate()?;
    if trace.windows(2).any(|w| (&w[1].unit_id, w[1].timestamp) < (&w[0].unit_id, w[0].timestamp)) {
        return Err(Error::invalid("trace", "records must be ordered by unit and time"));
    }
    let zone: Vec<Option<usize>> = trace.iter().map(|r| nearest_cluster(stops, r.latitude, r.longitude, cfg.stop_radius_m)).collect();
    let cuts_here = |s: usize| terminal_stops.is_none_or(|t| t.iter().any(|id| *id == stops[s].stop_id));

    let mut trips = Vec::new();
    let mut start = 0;
    while start < trace.len() {
        let unit = &trace[start].unit_id;
        let end = start + trace[start..].iter().take_while(|r| &r.unit_id == unit).count();
        for (a, b) in segments(&trace[start..end], &zone[start..end], cfg, &cuts_here) {
            if let Some(stops_seen) = passes(&trace[start + a..=start + b], &zone[start + a..=start + b], stops) {
                let service = ServiceLabel::for_date(stops_seen[0].time.date());
                trips.push(Trip { trip_id: format!("T{}", trips.len() + 1), unit_id: unit.clone(), stops: stops_seen, service });
            }
        }
        start = end;
    }
    Ok(trips)
}

/// Inclusive record ranges between dwells and gaps of one unit.
fn segments(recs: &[GpsRecord], zone: &[Option<usize>], cfg: &SegmentConfig, cuts_here: &dyn Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seg_start = 0;
    let mut i = 0;
    while i < recs.len() {
        if i > 0 && (recs[i].timestamp - recs[i - 1].timestamp).num_seconds() > cfg.max_gap_s {
            out.push((seg_start, i - 1));
            seg_start = i;
        }
        let stationary = |j: usize| recs[j].speed < cfg.dwell_speed_kmh && zone[j].is_some();
        if stationary(i) {
            let mut j = i;
            while j + 1 < recs.len()
                && stationary(j + 1)
                && zone[j + 1] == zone[i]
                && (recs[j + 1].timestamp - recs[j].timestamp).num_seconds() <= cfg.max_gap_s
            {
                j += 1;
            }
            let long = (recs[j].timestamp - recs[i].timestamp).num_seconds() >= cfg.dwell_threshold_s;
            if long && cuts_here(zone[i].expect("stationary implies a zone")) {
                out.push((seg_start, i));
                seg_start = j;
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if seg_start < recs.len() {
        out.push((seg_start, recs.len() - 1));
    }
    out
}

fn passes(recs: &[GpsRecord], zone: &[Option<usize>], stops: &[StopCluster]) -> Option<Vec<StopPass>> {
    let mut out: Vec<StopPass> = Vec::new();
    let mut last: Option<usize> = None;
    for (r, z) in recs.iter().zip(zone) {
        let Some(s) = *z else { continue };
        if last == Some(s) || out.last().is_some_and(|p| p.time >= r.timestamp) {
            continue;
        }
        out.push(StopPass { stop_id: stops[s].stop_id.clone(), time: r.timestamp });
        last = Some(s);
    }
    (out.len() >= 2).then_some(out)
}
