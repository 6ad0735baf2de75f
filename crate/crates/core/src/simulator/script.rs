use std::io::Read;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::config::KeyValues;
use crate::domain::{parse_timestamp, Timestamp};
use crate::error::{Error, Result};

/// A scripted bus line.
///
/// A route whose last waypoint equals its first is a loop and is driven
/// round and round; any other route is driven back and forth.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteScript {
    pub name: String,
    /// `(lat, lon)` in degrees.
    pub waypoints: Vec<(f64, f64)>,
    /// Indices into `waypoints`, strictly increasing.
    pub stop_indices: Vec<usize>,
    pub speed_kmh: f64,
    /// Time spent at each intermediate stop.
    pub dwell_s: f64,
    /// Time spent at a terminal between two trips.
    pub layover_s: f64,
}

impl RouteScript {
    pub fn is_loop(&self) -> bool {
        self.waypoints.len() > 2 && self.waypoints.first() == self.waypoints.last()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("route script", format!("{}: {reason}", self.name)));
        if self.waypoints.len() < 2 {
            return bad(format!("{} waypoints, need at least 2", self.waypoints.len()));
        }
        if let Some(&(lat, lon)) = self.waypoints.iter().find(|(lat, lon)| !(lat.abs() <= 90.0 && lon.abs() <= 180.0)) {
            return bad(format!("waypoint ({lat}, {lon}) out of range"));
        }
        if self.stop_indices.windows(2).any(|w| w[1] <= w[0]) {
            return bad("stop indices must be strictly increasing".into());
        }
        let last = self.waypoints.len() - 1;
        if self.stop_indices.first() != Some(&0) || self.stop_indices.last() != Some(&last) {
            return bad("the first and last waypoints must be stops".into());
        }
        if !(self.speed_kmh > 0.0 && self.speed_kmh.is_finite()) {
            return bad(format!("speed {} km/h must be positive", self.speed_kmh));
        }
        if !(self.dwell_s >= 0.0 && self.layover_s >= 0.0) {
            return bad("dwell and layover must be non-negative".into());
        }
        Ok(())
    }

    /// Parse a waypoint CSV with columns `lat,lon,is_stop`.
    pub fn from_csv<R: Read>(name: impl Into<String>, source: R, speed_kmh: f64, dwell_s: f64, layover_s: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            lat: f64,
            lon: f64,
            is_stop: u8,
        }
        let mut waypoints = Vec::new();
        let mut stop_indices = Vec::new();
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let row = row?;
            if row.is_stop > 1 {
                return Err(Error::invalid("route script", format!("row {}: is_stop must be 0 or 1", i + 1)));
            }
            if row.is_stop == 1 {
                stop_indices.push(waypoints.len());
            }
            waypoints.push((row.lat, row.lon));
        }
        let script = Self { name: name.into(), waypoints, stop_indices, speed_kmh, dwell_s, layover_s };
        script.validate()?;
        Ok(script)
    }
}

/// Fleet simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub routes: Vec<RouteScript>,
    /// Buses assigned to each entry of `routes`.
    pub buses_per_route: Vec<usize>,
    pub start: Timestamp,
    pub duration_h: f64,
    pub report_interval_s: u32,
    pub gps_noise_sigma_m: f64,
    pub zero_speed_rate: f64,
    pub duplicate_rate: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            routes: Vec::new(),
            buses_per_route: Vec::new(),
            start: NaiveDate::from_ymd_opt(2020, 10, 1).expect("valid date").and_hms_opt(5, 0, 0).expect("valid time"),
            duration_h: 48.0,
            report_interval_s: 10,
            gps_noise_sigma_m: 5.0,
            zero_speed_rate: 0.0,
            duplicate_rate: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.routes.is_empty() {
            return Err(Error::invalid("sim config", "no routes"));
        }
        if self.buses_per_route.len() != self.routes.len() {
            return Err(Error::invalid("sim config", "buses_per_route must have one entry per route"));
        }
        for route in &self.routes {
            route.validate()?;
        }
        if !(self.duration_h > 0.0 && self.duration_h.is_finite()) || self.report_interval_s == 0 {
            return Err(Error::invalid("sim config", "duration and report interval must be positive"));
        }
        if !(self.gps_noise_sigma_m >= 0.0 && self.gps_noise_sigma_m.is_finite()) {
            return Err(Error::invalid("sim config", "GPS noise sigma must be >= 0"));
        }
        for (name, rate) in [("zero-speed", self.zero_speed_rate), ("duplicate", self.duplicate_rate)] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::invalid("sim config", format!("{name} rate {rate} outside [0, 1)")));
            }
        }
        Ok(())
    }

    /// Number of report ticks per bus.
    pub fn ticks(&self) -> usize {
        (self.duration_h * 3600.0 / f64::from(self.report_interval_s)).round() as usize
    }

    /// Read `sim.*` and `route.<n>.*` keys. Route files are resolved
    /// relative to the configuration file.
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let start = match kv.get_str("sim.start") {
            Some(text) => parse_timestamp(text)?,
            None => d.start,
        };
        let mut cfg = Self {
            start,
            duration_h: kv.get_or("sim.duration_h", d.duration_h)?,
            report_interval_s: kv.get_or("sim.report_interval_s", d.report_interval_s)?,
            gps_noise_sigma_m: kv.get_or("sim.gps_noise_m", d.gps_noise_sigma_m)?,
            zero_speed_rate: kv.get_or("sim.zero_speed_rate", d.zero_speed_rate)?,
            duplicate_rate: kv.get_or("sim.duplicate_rate", d.duplicate_rate)?,
            seed: kv.get_or("seed", d.seed)?,
            ..d
        };
        for group in kv.groups("route") {
            let key = |field: &str| format!("route.{group}.{field}");
            let file: String = kv.require(&key("file"))?;
            let text = kv.read_file(&file)?;
            let name = kv.get_str(&key("name")).map(str::to_string).unwrap_or_else(|| format!("Route {group}"));
            let script = RouteScript::from_csv(
                name,
                text.as_bytes(),
                kv.require(&key("speed_kmh"))?,
                kv.get_or(&key("dwell_s"), 30.0)?,
                kv.get_or(&key("layover_s"), 180.0)?,
            )?;
            cfg.routes.push(script);
            cfg.buses_per_route.push(kv.get_or(&key("buses"), 1)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_waypoint_csv() {
        let text = "lat,lon,is_stop\n42.35,13.39,1\n42.35,13.40,0\n42.36,13.40,1\n";
        let r = RouteScript::from_csv("r", text.as_bytes(), 30.0, 20.0, 60.0).unwrap();
        assert_eq!(r.waypoints.len(), 3);
        assert_eq!(r.stop_indices, [0, 2]);
        assert!(!r.is_loop());
    }

    #[test]
    fn rejects_bad_scripts() {
        let no_terminal = "lat,lon,is_stop\n42.35,13.39,1\n42.35,13.40,0\n";
        assert!(RouteScript::from_csv("r", no_terminal.as_bytes(), 30.0, 20.0, 60.0).is_err());
        let one = "lat,lon,is_stop\n42.35,13.39,1\n";
        assert!(RouteScript::from_csv("r", one.as_bytes(), 30.0, 20.0, 60.0).is_err());
        let ok = "lat,lon,is_stop\n42.35,13.39,1\n42.35,13.40,1\n";
        assert!(RouteScript::from_csv("r", ok.as_bytes(), 0.0, 20.0, 60.0).is_err());
    }

    #[test]
    fn rates_must_be_below_one() {
        let route = RouteScript::from_csv("r", "lat,lon,is_stop\n42.35,13.39,1\n42.35,13.40,1\n".as_bytes(), 30.0, 20.0, 60.0).unwrap();
        let cfg = SimConfig { routes: vec![route], buses_per_route: vec![1], duplicate_rate: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(SimConfig { duplicate_rate: 0.1, ..cfg }.validate().is_ok());
    }
}
