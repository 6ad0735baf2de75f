use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Seconds after midnight of the service day. May exceed 24 hours for trips
/// running past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GtfsTime(pub u32);

impl GtfsTime {
    pub fn hms(h: u32, m: u32, s: u32) -> Self {
        Self(h * 3600 + m * 60 + s)
    }
}

impl fmt::Display for GtfsTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}:{:02}", self.0 / 3600, self.0 / 60 % 60, self.0 % 60)
    }
}

impl FromStr for GtfsTime {
    type Err = Error;

    /// `H:MM:SS` or `HH:MM:SS`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("GTFS time", format!("{s:?} is not H:MM:SS"));
        let mut parts = s.trim().split(':');
        let (Some(h), Some(m), Some(sec), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        if m.len() != 2 || sec.len() != 2 || h.is_empty() || h.len() > 3 {
            return Err(bad());
        }
        let (h, m, sec): (u32, u32, u32) = (h.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?, sec.parse().map_err(|_| bad())?);
        if m > 59 || sec > 59 {
            return Err(bad());
        }
        Ok(Self::hms(h, m, sec))
    }
}

impl Serialize for GtfsTime {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GtfsTime {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Coordinates keep the shortest text that reads back to the same value,
/// padded to at least six decimals.
pub(crate) mod coord {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(v: f64) -> String {
        let text = v.to_string();
        let decimals = text.split_once('.').map_or(0, |(_, d)| d.len());
        if decimals >= 6 {
            text
        } else if decimals == 0 {
            format!("{text}.000000")
        } else {
            format!("{text}{}", "0".repeat(6 - decimals))
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        text.trim().parse().map_err(serde::de::Error::custom)
    }
}

mod ymd {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&d.format("%Y%m%d"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let text = String::deserialize(d)?;
        NaiveDate::parse_from_str(text.trim(), "%Y%m%d").map_err(serde::de::Error::custom)
    }
}

mod flag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            n => Err(serde::de::Error::custom(format!("day flag {n} is not 0 or 1"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agency {
    pub agency_id: String,
    pub agency_name: String,
    pub agency_url: String,
    pub agency_timezone: String,
}

impl Default for Agency {
    fn default() -> Self {
        Self {
            agency_id: "AMA".into(),
            agency_name: "Azienda Mobilità L'Aquila".into(),
            agency_url: "http://www.ama.laquila.it/".into(),
            agency_timezone: "Europe/Rome".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtfsStop {
    pub stop_id: String,
    #[serde(default)]
    pub stop_name: String,
    #[serde(with = "coord")]
    pub stop_lat: f64,
    #[serde(with = "coord")]
    pub stop_lon: f64,
    #[serde(default)]
    pub location_type: i32,
    #[serde(default)]
    pub parent_station: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtfsRoute {
    pub route_id: String,
    #[serde(default)]
    pub agency_id: String,
    #[serde(default)]
    pub route_short_name: String,
    #[serde(default)]
    pub route_long_name: String,
    pub route_type: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtfsTrip {
    pub trip_id: String,
    pub route_id: String,
    pub service_id: String,
    #[serde(default)]
    pub trip_headsign: String,
    #[serde(default)]
    pub block_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopTime {
    pub trip_id: String,
    pub arrival_time: GtfsTime,
    pub departure_time: GtfsTime,
    pub stop_id: String,
    pub stop_sequence: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub service_id: String,
    #[serde(with = "flag")]
    pub monday: bool,
    #[serde(with = "flag")]
    pub tuesday: bool,
    #[serde(with = "flag")]
    pub wednesday: bool,
    #[serde(with = "flag")]
    pub thursday: bool,
    #[serde(with = "flag")]
    pub friday: bool,
    #[serde(with = "flag")]
    pub saturday: bool,
    #[serde(with = "flag")]
    pub sunday: bool,
    #[serde(with = "ymd")]
    pub start_date: NaiveDate,
    #[serde(with = "ymd")]
    pub end_date: NaiveDate,
}

impl Calendar {
    pub fn days(&self) -> [bool; 7] {
        [self.monday, self.tuesday, self.wednesday, self.thursday, self.friday, self.saturday, self.sunday]
    }
}

/// In-memory GTFS feed; each vector holds one file's rows in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GtfsFeed {
    pub agency: Vec<Agency>,
    pub stops: Vec<GtfsStop>,
    pub routes: Vec<GtfsRoute>,
    pub trips: Vec<GtfsTrip>,
    pub stop_times: Vec<StopTime>,
    pub calendar: Vec<Calendar>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_format_and_parse() {
        assert_eq!(GtfsTime::hms(7, 5, 9).to_string(), "07:05:09");
        assert_eq!(GtfsTime::hms(25, 0, 0).to_string(), "25:00:00");
        assert_eq!("7:05:09".parse::<GtfsTime>().unwrap(), GtfsTime::hms(7, 5, 9));
        assert_eq!("25:00:00".parse::<GtfsTime>().unwrap().0, 90_000);
        for bad in ["7:5:09", "07:60:00", "x", "07:00", "07:00:00:00", ""] {
            assert!(bad.parse::<GtfsTime>().is_err(), "{bad}");
        }
    }

    #[test]
    fn coordinates_keep_six_decimals_and_round_trip() {
        assert_eq!(coord::format(42.367679), "42.367679");
        assert_eq!(coord::format(13.352023), "13.352023");
        assert_eq!(coord::format(42.35), "42.350000");
        assert_eq!(coord::format(13.0), "13.000000");
        assert_eq!(coord::format(-0.5), "-0.500000");
        let v = 42.36767912345678;
        assert_eq!(coord::format(v).parse::<f64>().unwrap(), v);
    }
}
