use std::collections::{HashMap, HashSet};
use std::fmt;

use super::model::{GtfsFeed, StopTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    /// Stable rule identifier such as `FK_STOP`.
    pub rule: &'static str,
    /// `file:line` of the offending row, or just the file.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "ERROR",
            Severity::Warning => "WARNING",
        };
        write!(f, "{tag} {} {}: {}", self.rule, self.location, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn is_valid(&self) -> bool {
        self.error_count() == 0
    }

    pub fn has_rule(&self, rule: &str) -> bool {
        self.findings.iter().any(|f| f.rule == rule)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "errors: {}", self.error_count())?;
        writeln!(f, "warnings: {}", self.warnings().count())?;
        for finding in self.errors().chain(self.warnings()) {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

struct Checker {
    findings: Vec<Finding>,
}

impl Checker {
    fn push(&mut self, severity: Severity, rule: &'static str, file: &str, row: Option<usize>, message: String) {
        let location = match row {
            Some(i) => format!("{file}:{}", i + 2),
            None => file.to_string(),
        };
        self.findings.push(Finding { severity, rule, location, message });
    }

    fn error(&mut self, rule: &'static str, file: &str, row: Option<usize>, message: String) {
        self.push(Severity::Error, rule, file, row, message);
    }

    fn warning(&mut self, rule: &'static str, file: &str, row: Option<usize>, message: String) {
        self.push(Severity::Warning, rule, file, row, message);
    }

    /// Collect keys, reporting empty and repeated ones.
    fn keys<'a>(&mut self, file: &str, column: &str, keys: impl Iterator<Item = &'a str>) -> HashSet<&'a str> {
        let mut seen = HashSet::new();
        for (i, key) in keys.enumerate() {
            if key.is_empty() {
                self.error("MISSING_KEY", file, Some(i), format!("empty {column}"));
            } else if !seen.insert(key) {
                self.error("DUPLICATE_KEY", file, Some(i), format!("{column} {key:?} appears more than once"));
            }
        }
        seen
    }
}

fn valid_route_type(t: i32) -> bool {
    matches!(t, 0..=7 | 11 | 12) || (100..=1702).contains(&t)
}

/// Check a feed for structural and referential problems.
pub fn validate(feed: &GtfsFeed) -> ValidationReport {
    let mut c = Checker { findings: Vec::new() };

    if feed.agency.is_empty() {
        c.error("NO_AGENCY", "agency.txt", None, "no agency defined".into());
    }
    let agencies = c.keys("agency.txt", "agency_id", feed.agency.iter().map(|a| a.agency_id.as_str()));
    for (i, a) in feed.agency.iter().enumerate() {
        if a.agency_name.trim().is_empty() {
            c.error("REQUIRED_FIELD", "agency.txt", Some(i), "empty agency_name".into());
        }
        if !(a.agency_url.starts_with("http://") || a.agency_url.starts_with("https://")) {
            c.error("INVALID_URL", "agency.txt", Some(i), format!("agency_url {:?} is not an http(s) URL", a.agency_url));
        }
        if !a.agency_timezone.contains('/') {
            c.error("INVALID_TIMEZONE", "agency.txt", Some(i), format!("agency_timezone {:?} is not an Area/Location name", a.agency_timezone));
        }
    }

    let stops = c.keys("stops.txt", "stop_id", feed.stops.iter().map(|s| s.stop_id.as_str()));
    for (i, s) in feed.stops.iter().enumerate() {
        if !(-90.0..=90.0).contains(&s.stop_lat) || !(-180.0..=180.0).contains(&s.stop_lon) {
            c.error("COORDINATE_RANGE", "stops.txt", Some(i), format!("({}, {}) is not a valid position", s.stop_lat, s.stop_lon));
        } else if s.stop_lat == 0.0 && s.stop_lon == 0.0 {
            c.warning("NULL_ISLAND", "stops.txt", Some(i), "stop placed at (0, 0)".into());
        }
        if !(0..=4).contains(&s.location_type) {
            c.error("LOCATION_TYPE", "stops.txt", Some(i), format!("location_type {} outside 0..=4", s.location_type));
        }
        if !s.parent_station.is_empty() && !stops.contains(s.parent_station.as_str()) {
            c.error("FK_PARENT_STATION", "stops.txt", Some(i), format!("parent_station {:?} is not a stop", s.parent_station));
        }
        if s.location_type == 0 && s.stop_name.trim().is_empty() {
            c.error("REQUIRED_FIELD", "stops.txt", Some(i), "empty stop_name".into());
        }
    }

    if feed.routes.is_empty() {
        c.error("NO_ROUTES", "routes.txt", None, "no routes".into());
    }
    let routes = c.keys("routes.txt", "route_id", feed.routes.iter().map(|r| r.route_id.as_str()));
    for (i, r) in feed.routes.iter().enumerate() {
        if r.agency_id.is_empty() {
            if feed.agency.len() > 1 {
                c.error("FK_AGENCY", "routes.txt", Some(i), "agency_id is required when several agencies exist".into());
            }
        } else if !agencies.contains(r.agency_id.as_str()) {
            c.error("FK_AGENCY", "routes.txt", Some(i), format!("agency_id {:?} is not an agency", r.agency_id));
        }
        if r.route_short_name.trim().is_empty() && r.route_long_name.trim().is_empty() {
            c.error("ROUTE_NAME", "routes.txt", Some(i), "route has neither a short nor a long name".into());
        }
        if !valid_route_type(r.route_type) {
            c.error("ROUTE_TYPE", "routes.txt", Some(i), format!("route_type {} is not defined", r.route_type));
        }
    }

    let services = c.keys("calendar.txt", "service_id", feed.calendar.iter().map(|s| s.service_id.as_str()));
    for (i, s) in feed.calendar.iter().enumerate() {
        if s.end_date < s.start_date {
            c.error("CALENDAR_RANGE", "calendar.txt", Some(i), format!("end_date {} precedes start_date {}", s.end_date, s.start_date));
        }
        if !s.days().contains(&true) {
            c.warning("CALENDAR_NO_DAYS", "calendar.txt", Some(i), format!("service {:?} runs on no weekday", s.service_id));
        }
    }

    let trips = c.keys("trips.txt", "trip_id", feed.trips.iter().map(|t| t.trip_id.as_str()));
    let mut routes_with_trips = HashSet::new();
    for (i, t) in feed.trips.iter().enumerate() {
        if !routes.contains(t.route_id.as_str()) {
            c.error("FK_ROUTE", "trips.txt", Some(i), format!("route_id {:?} is not a route", t.route_id));
        }
        routes_with_trips.insert(t.route_id.as_str());
        if !services.contains(t.service_id.as_str()) {
            c.error("FK_SERVICE", "trips.txt", Some(i), format!("service_id {:?} is not in calendar.txt", t.service_id));
        }
    }
    for (i, r) in feed.routes.iter().enumerate() {
        if !routes_with_trips.contains(r.route_id.as_str()) {
            c.error("ROUTE_NO_TRIPS", "routes.txt", Some(i), format!("route {:?} has no trips", r.route_id));
        }
    }

    let mut by_trip: HashMap<&str, Vec<(usize, &StopTime)>> = HashMap::new();
    let mut used_stops = HashSet::new();
    for (i, st) in feed.stop_times.iter().enumerate() {
        if !trips.contains(st.trip_id.as_str()) {
            c.error("FK_TRIP", "stop_times.txt", Some(i), format!("trip_id {:?} is not a trip", st.trip_id));
        }
        if !stops.contains(st.stop_id.as_str()) {
            c.error("FK_STOP", "stop_times.txt", Some(i), format!("stop_id {:?} is not a stop", st.stop_id));
        }
        if st.departure_time < st.arrival_time {
            c.error("DEPARTURE_BEFORE_ARRIVAL", "stop_times.txt", Some(i), format!("departure {} precedes arrival {}", st.departure_time, st.arrival_time));
        }
        used_stops.insert(st.stop_id.as_str());
        by_trip.entry(st.trip_id.as_str()).or_default().push((i, st));
    }
    for (i, t) in feed.trips.iter().enumerate() {
        let rows = by_trip.get(t.trip_id.as_str()).map_or(&[][..], Vec::as_slice);
        if rows.len() < 2 {
            c.error("TRIP_STOP_COUNT", "trips.txt", Some(i), format!("trip {:?} has {} stop_times, need at least 2", t.trip_id, rows.len()));
        }
        for pair in rows.windows(2) {
            let ((_, a), (j, b)) = (pair[0], pair[1]);
            if b.stop_sequence <= a.stop_sequence {
                c.error("STOP_SEQUENCE", "stop_times.txt", Some(j), format!("stop_sequence {} does not increase after {}", b.stop_sequence, a.stop_sequence));
            }
            if b.arrival_time < a.departure_time {
                c.error("TIME_TRAVEL", "stop_times.txt", Some(j), format!("arrival {} precedes previous departure {}", b.arrival_time, a.departure_time));
            }
        }
    }
    for (i, s) in feed.stops.iter().enumerate() {
        if s.location_type == 0 && !used_stops.contains(s.stop_id.as_str()) {
            c.warning("UNUSED_STOP", "stops.txt", Some(i), format!("stop {:?} is served by no trip", s.stop_id));
        }
    }

    ValidationReport { findings: c.findings }
}
