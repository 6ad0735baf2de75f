use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

use super::model::{Agency, Calendar, GtfsFeed, GtfsRoute, GtfsStop, GtfsTime, GtfsTrip, StopTime};
use crate::domain::{ServiceLabel, TransitGraph};
use crate::error::{Error, Result};

/// GTFS `route_type` for bus service.
pub const ROUTE_TYPE_BUS: i32 = 3;

/// Turn a transit graph into a feed.
///
/// Arrival and departure are both the observed pass time, written relative
/// to midnight of the day the trip started. Each trip's `block_id` is the
/// vehicle that ran it and its headsign is the name of its last stop.
pub fn build_feed(graph: &TransitGraph, agency: &Agency) -> Result<GtfsFeed> {
    if graph.routes.is_empty() || graph.trips.is_empty() {
        return Err(Error::NothingToExport("the transit graph has no routes"));
    }
    graph.validate()?;

    let stop_names: HashMap<&str, &str> = graph.stops.iter().map(|s| (s.stop_id.as_str(), s.name.as_str())).collect();
    let route_of: HashMap<&str, &str> = graph.routes.iter().flat_map(|r| r.trip_ids.iter().map(move |t| (t.as_str(), r.route_id.as_str()))).collect();

    let mut feed = GtfsFeed { agency: vec![agency.clone()], ..Default::default() };
    feed.stops = graph
        .stops
        .iter()
        .map(|s| GtfsStop {
            stop_id: s.stop_id.clone(),
            stop_name: s.name.clone(),
            stop_lat: s.latitude,
            stop_lon: s.longitude,
            location_type: s.location_type,
            parent_station: s.parent_station.clone().unwrap_or_default(),
        })
        .collect();
    feed.routes = graph
        .routes
        .iter()
        .map(|r| GtfsRoute {
            route_id: r.route_id.clone(),
            agency_id: agency.agency_id.clone(),
            route_short_name: r.short_name.clone(),
            route_long_name: r.long_name.clone(),
            route_type: ROUTE_TYPE_BUS,
        })
        .collect();

    let mut service_dates: BTreeMap<ServiceLabel, (NaiveDate, NaiveDate)> = BTreeMap::new();
    for trip in &graph.trips {
        let Some(route_id) = route_of.get(trip.trip_id.as_str()) else { continue };
        let date = trip.start_time().date();
        let midnight = date.and_hms_opt(0, 0, 0).expect("midnight exists");
        let span = service_dates.entry(trip.service).or_insert((date, date));
        span.0 = span.0.min(date);
        span.1 = span.1.max(date);

        let last = &trip.stops[trip.stops.len() - 1].stop_id;
        feed.trips.push(GtfsTrip {
            trip_id: trip.trip_id.clone(),
            route_id: route_id.to_string(),
            service_id: trip.service.as_str().into(),
            trip_headsign: stop_names.get(last.as_str()).copied().unwrap_or_default().into(),
            block_id: trip.unit_id.clone(),
        });
        for (n, pass) in trip.stops.iter().enumerate() {
            let secs = (pass.time - midnight).num_seconds();
            let time = GtfsTime(u32::try_from(secs).map_err(|_| Error::invalid("trip", format!("{} pass time out of range", trip.trip_id)))?);
            feed.stop_times.push(StopTime {
                trip_id: trip.trip_id.clone(),
                arrival_time: time,
                departure_time: time,
                stop_id: pass.stop_id.clone(),
                stop_sequence: n as u32 + 1,
            });
        }
    }

    feed.calendar = service_dates
        .into_iter()
        .map(|(label, (start_date, end_date))| {
            use chrono::Weekday::*;
            let on = |d| label.runs_on(d);
            Calendar {
                service_id: label.as_str().into(),
                monday: on(Mon),
                tuesday: on(Tue),
                wednesday: on(Wed),
                thursday: on(Thu),
                friday: on(Fri),
                saturday: on(Sat),
                sunday: on(Sun),
                start_date,
                end_date,
            }
        })
        .collect();
    Ok(feed)
}
