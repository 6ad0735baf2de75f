//! GTFS feed construction, serialization and validation.

mod build;
mod io;
mod model;
mod validate;

pub use build::{build_feed, ROUTE_TYPE_BUS};
pub use io::{package, parse_feed, parse_files, parse_zip, render, write_feed, FEED_FILES};
pub use model::{Agency, Calendar, GtfsFeed, GtfsRoute, GtfsStop, GtfsTime, GtfsTrip, StopTime};
pub use validate::{validate, Finding, Severity, ValidationReport};

#[cfg(test)]
mod tests;
