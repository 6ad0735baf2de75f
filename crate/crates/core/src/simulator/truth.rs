use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::domain::{format_timestamp, BusStop, Route, TransitGraph, Trip};
use crate::error::{Error, Result};

/// Which noise class, if any, produced an emitted row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Glitch {
    None,
    /// Exact copy of the preceding row.
    Duplicate,
    /// Moving row reported with speed 0.
    ZeroSpeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordTruth {
    pub glitch: Glitch,
    /// Index into [`GroundTruth::stops`] when the bus was standing at a stop.
    pub dwell_stop: Option<usize>,
}

/// Exact network and per-row tags behind a simulated record stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub stops: Vec<BusStop>,
    pub trips: Vec<Trip>,
    pub routes: Vec<Route>,
    /// Parallel to the emitted records.
    pub records: Vec<RecordTruth>,
}

impl GroundTruth {
    pub fn graph(&self) -> TransitGraph {
        TransitGraph { stops: self.stops.clone(), trips: self.trips.clone(), routes: self.routes.clone() }
    }
}

#[derive(Serialize, Deserialize)]
struct StopRow {
    stop_id: String,
    name: String,
    latitude: f64,
    longitude: f64,
}

/// `stop_id,name,latitude,longitude`.
pub fn write_stops_csv<W: Write>(stops: &[BusStop], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for s in stops {
        w.serialize(StopRow { stop_id: s.stop_id.clone(), name: s.name.clone(), latitude: s.latitude, longitude: s.longitude })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stops_csv<R: Read>(source: R) -> Result<Vec<BusStop>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    r.deserialize::<StopRow>()
        .map(|row| {
            let row = row?;
            BusStop::new(row.stop_id, row.name, row.latitude, row.longitude)
        })
        .collect()
}

/// One row per stop pass: `trip_id,route_id,unit_id,service_id,stop_sequence,stop_id,time`.
pub fn write_trips_csv<W: Write>(trips: &[Trip], routes: &[Route], sink: W) -> Result<()> {
    let route_of = |trip_id: &str| routes.iter().find(|r| r.trip_ids.iter().any(|t| t == trip_id)).map(|r| r.route_id.as_str()).unwrap_or("");
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["trip_id", "route_id", "unit_id", "service_id", "stop_sequence", "stop_id", "time"])?;
    for trip in trips {
        let route = route_of(&trip.trip_id);
        for (i, pass) in trip.stops.iter().enumerate() {
            w.write_record([
                trip.trip_id.as_str(),
                route,
                trip.unit_id.as_str(),
                trip.service.as_str(),
                &(i + 1).to_string(),
                pass.stop_id.as_str(),
                &format_timestamp(&pass.time),
            ])?;
        }
    }
    w.flush().map_err(Error::StdIo)?;
    Ok(())
}
