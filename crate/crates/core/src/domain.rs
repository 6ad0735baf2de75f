//! Vocabulary types shared by every stage of the pipeline.
//!
//! Everything here is immutable once constructed; constructors reject
//! out-of-range values so downstream code can rely on the invariants.

use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Timestamp = NaiveDateTime;

/// Parse a tracker timestamp.
///
/// Accepts `YYYY-MM-DD HH:MM:SS` and the `YYYY-MM-DD HH:MM.SS` variant found in
/// some tracker exports; any run of whitespace may separate date and time.
pub fn parse_timestamp(text: &str) -> Result<Timestamp> {
    let mut parts = text.split_whitespace();
    let (Some(date), Some(time), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(Error::invalid("timestamp", format!("`{text}` is not `date time`")));
    };
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|e| Error::invalid("timestamp", format!("`{text}`: {e}")))?;
    let time = NaiveTime::parse_from_str(time, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(time, "%H:%M.%S"))
        .map_err(|e| Error::invalid("timestamp", format!("`{text}`: {e}")))?;
    Ok(date.and_time(time))
}

pub fn format_timestamp(ts: &Timestamp) -> String {
    ts.format("%Y-%m-%d %H:%M:%S").to_string()
}

mod ts_format {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::Timestamp;

    pub fn serialize<S: Serializer>(ts: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_timestamp(ts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let text = String::deserialize(d)?;
        super::parse_timestamp(&text).map_err(serde::de::Error::custom)
    }
}

fn check_coordinates(what: &'static str, lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(Error::invalid(what, format!("latitude {lat} outside [-90, 90]")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(Error::invalid(what, format!("longitude {lon} outside [-180, 180]")));
    }
    Ok(())
}

/// One raw tracker reading. Speed is in km/h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGpsRecord")]
pub struct GpsRecord {
    pub latitude: f64,
    pub longitude: f64,
    pub speed: f64,
    pub unit_id: String,
    #[serde(with = "ts_format")]
    pub timestamp: Timestamp,
}

#[derive(Deserialize)]
struct RawGpsRecord {
    latitude: f64,
    longitude: f64,
    speed: f64,
    unit_id: String,
    #[serde(with = "ts_format")]
    timestamp: Timestamp,
}

impl TryFrom<RawGpsRecord> for GpsRecord {
    type Error = Error;

    fn try_from(raw: RawGpsRecord) -> Result<Self> {
        GpsRecord::new(raw.latitude, raw.longitude, raw.speed, raw.unit_id, raw.timestamp)
    }
}

impl GpsRecord {
    pub fn new(latitude: f64, longitude: f64, speed: f64, unit_id: impl Into<String>, timestamp: Timestamp) -> Result<Self> {
        let unit_id = unit_id.into();
        check_coordinates("GPS record", latitude, longitude)?;
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(Error::invalid("GPS record", format!("speed {speed} is not a finite value >= 0")));
        }
        if unit_id.is_empty() {
            return Err(Error::invalid("GPS record", "empty unit id"));
        }
        Ok(Self { latitude, longitude, speed, unit_id, timestamp })
    }

    pub fn tuple(&self) -> FeatureTuple {
        FeatureTuple { lat: self.latitude, lon: self.longitude, sp: self.speed }
    }
}

/// `<latitude, longitude, speed>`, raw or normalized depending on context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureTuple {
    pub lat: f64,
    pub lon: f64,
    pub sp: f64,
}

impl FeatureTuple {
    pub fn new(lat: f64, lon: f64, sp: f64) -> Result<Self> {
        if !(lat.is_finite() && lon.is_finite() && sp.is_finite()) {
            return Err(Error::invalid("feature tuple", format!("non-finite value in ({lat}, {lon}, {sp})")));
        }
        Ok(Self { lat, lon, sp })
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.lat, self.lon, self.sp]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self { lat: a[0], lon: a[1], sp: a[2] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledTuple {
    pub tuple: FeatureTuple,
    pub is_stop: bool,
}

/// A training window: `k - 1` feature tuples followed by one label tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub features: Vec<FeatureTuple>,
    pub label: FeatureTuple,
    /// Present only when the source records carried stop flags.
    pub is_stop: Option<bool>,
    pub unit_id: String,
    #[serde(with = "ts_format")]
    pub start_time: Timestamp,
    #[serde(with = "ts_format")]
    pub end_time: Timestamp,
}

impl Block {
    pub fn labeled(&self) -> Option<LabeledTuple> {
        self.is_stop.map(|is_stop| LabeledTuple { tuple: self.label, is_stop })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub fn new(what: &'static str, min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::DegenerateScaler(what));
        }
        Ok(Self { min, max })
    }

    pub fn forward(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }
}

/// Min-max normalization fitted on the training split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub lat: FeatureRange,
    pub lon: FeatureRange,
    pub speed: FeatureRange,
}

impl ScalerParams {
    pub fn forward(&self, t: FeatureTuple) -> FeatureTuple {
        FeatureTuple { lat: self.lat.forward(t.lat), lon: self.lon.forward(t.lon), sp: self.speed.forward(t.sp) }
    }

    pub fn inverse(&self, t: FeatureTuple) -> FeatureTuple {
        FeatureTuple { lat: self.lat.inverse(t.lat), lon: self.lon.inverse(t.lon), sp: self.speed.inverse(t.sp) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusStop {
    pub stop_id: String,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub location_type: i32,
    pub parent_station: Option<String>,
}

impl BusStop {
    pub fn new(stop_id: impl Into<String>, name: impl Into<String>, latitude: f64, longitude: f64) -> Result<Self> {
        let stop_id = stop_id.into();
        if stop_id.is_empty() {
            return Err(Error::invalid("bus stop", "empty stop id"));
        }
        check_coordinates("bus stop", latitude, longitude)?;
        Ok(Self { stop_id, name: name.into(), latitude, longitude, location_type: 0, parent_station: None })
    }
}

/// Weekday class of a trip, used as the GTFS `service_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ServiceLabel {
    /// Monday to Saturday.
    Feriali,
    /// Sundays.
    Festivi,
}

impl ServiceLabel {
    pub fn for_date(date: NaiveDate) -> Self {
        if date.weekday() == Weekday::Sun {
            ServiceLabel::Festivi
        } else {
            ServiceLabel::Feriali
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ServiceLabel::Feriali => "Feriali",
            ServiceLabel::Festivi => "Festivi",
        }
    }

    pub fn runs_on(&self, day: Weekday) -> bool {
        match self {
            ServiceLabel::Feriali => day != Weekday::Sun,
            ServiceLabel::Festivi => day == Weekday::Sun,
        }
    }
}

impl fmt::Display for ServiceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopPass {
    pub stop_id: String,
    #[serde(with = "ts_format")]
    pub time: Timestamp,
}

/// One observed traversal of a stop sequence by one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: String,
    pub unit_id: String,
    pub stops: Vec<StopPass>,
    pub service: ServiceLabel,
}

impl Trip {
    pub fn stop_ids(&self) -> Vec<&str> {
        self.stops.iter().map(|p| p.stop_id.as_str()).collect()
    }

    pub fn start_time(&self) -> Timestamp {
        self.stops[0].time
    }

    pub fn end_time(&self) -> Timestamp {
        self.stops[self.stops.len() - 1].time
    }

    pub fn validate(&self) -> Result<()> {
        if self.stops.len() < 2 {
            return Err(Error::invalid("trip", format!("{} visits fewer than 2 stops", self.trip_id)));
        }
        if self.stops.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(Error::invalid("trip", format!("{} pass times are not strictly increasing", self.trip_id)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub route_id: String,
    pub stop_ids: Vec<String>,
    pub short_name: String,
    pub long_name: String,
    pub trip_ids: Vec<String>,
}

/// Inferred network: canonical stops, observed trips and the routes grouping them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransitGraph {
    pub stops: Vec<BusStop>,
    pub trips: Vec<Trip>,
    pub routes: Vec<Route>,
}

impl TransitGraph {
    pub fn is_empty(&self) -> bool {
        self.stops.is_empty() && self.trips.is_empty() && self.routes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        use std::collections::{HashMap, HashSet};

        let mut stop_ids = HashSet::new();
        for stop in &self.stops {
            check_coordinates("bus stop", stop.latitude, stop.longitude)?;
            if !stop_ids.insert(stop.stop_id.as_str()) {
                return Err(Error::invalid("transit graph", format!("duplicate stop id {}", stop.stop_id)));
            }
        }
        let mut trips = HashMap::new();
        for trip in &self.trips {
            trip.validate()?;
            if let Some(pass) = trip.stops.iter().find(|p| !stop_ids.contains(p.stop_id.as_str())) {
                return Err(Error::invalid("transit graph", format!("trip {} references unknown stop {}", trip.trip_id, pass.stop_id)));
            }
            if trips.insert(trip.trip_id.as_str(), trip).is_some() {
                return Err(Error::invalid("transit graph", format!("duplicate trip id {}", trip.trip_id)));
            }
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for route in &self.routes {
            for trip_id in &route.trip_ids {
                let Some(trip) = trips.get(trip_id.as_str()) else {
                    return Err(Error::invalid("transit graph", format!("route {} lists unknown trip {trip_id}", route.route_id)));
                };
                if trip.stop_ids() != route.stop_ids.iter().map(String::as_str).collect::<Vec<_>>() {
                    return Err(Error::invalid("transit graph", format!("trip {trip_id} does not follow route {}", route.route_id)));
                }
                if owner.insert(trip_id, &route.route_id).is_some() {
                    return Err(Error::invalid("transit graph", format!("trip {trip_id} belongs to several routes")));
                }
            }
        }
        if let Some(orphan) = self.trips.iter().find(|t| !owner.contains_key(t.trip_id.as_str())) {
            return Err(Error::invalid("transit graph", format!("trip {} belongs to no route", orphan.trip_id)));
        }
        Ok(())
    }
}
