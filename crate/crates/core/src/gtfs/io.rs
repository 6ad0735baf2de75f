use std::io::{Cursor, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::model::GtfsFeed;
use crate::error::{Error, Result};

/// Feed files in the order they are written and packaged.
pub const FEED_FILES: [&str; 6] = ["agency.txt", "stops.txt", "routes.txt", "trips.txt", "stop_times.txt", "calendar.txt"];

const HEADERS: [&[&str]; 6] = [
    &["agency_id", "agency_name", "agency_url", "agency_timezone"],
    &["stop_id", "stop_name", "stop_lat", "stop_lon", "location_type", "parent_station"],
    &["route_id", "agency_id", "route_short_name", "route_long_name", "route_type"],
    &["trip_id", "route_id", "service_id", "trip_headsign", "block_id"],
    &["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
    &["service_id", "monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "start_date", "end_date"],
];

fn table<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::StdIo(e.into_error()))
}

/// Contents of every feed file, in [`FEED_FILES`] order.
pub fn render(feed: &GtfsFeed) -> Result<Vec<(&'static str, Vec<u8>)>> {
    let bodies = [
        table(HEADERS[0], &feed.agency)?,
        table(HEADERS[1], &feed.stops)?,
        table(HEADERS[2], &feed.routes)?,
        table(HEADERS[3], &feed.trips)?,
        table(HEADERS[4], &feed.stop_times)?,
        table(HEADERS[5], &feed.calendar)?,
    ];
    Ok(FEED_FILES.into_iter().zip(bodies).collect())
}

/// Write the feed as loose `.txt` files into `dir`, creating it if needed.
pub fn write_feed(feed: &GtfsFeed, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, body) in render(feed)? {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Zip archive of the feed. Entry order, timestamps and permissions are
/// fixed, so equal feeds give byte-identical archives.
pub fn package(feed: &GtfsFeed) -> Result<Vec<u8>> {
    let options = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated).last_modified_time(DateTime::default()).unix_permissions(0o644);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, body) in render(feed)? {
        zip.start_file(name, options)?;
        zip.write_all(&body)?;
    }
    Ok(zip.finish()?.into_inner())
}

fn parse_table<T: DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<Vec<T>> {
    let bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::Headers).from_reader(bytes);
    reader.deserialize().enumerate().map(|(i, row)| row.map_err(|e| Error::Gtfs { file: name.into(), reason: format!("line {}: {e}", i + 2) })).collect()
}

/// Build a feed from a lookup returning each file's bytes, or `None` when absent.
/// Columns other than the ones this crate writes are ignored.
pub fn parse_files(mut fetch: impl FnMut(&str) -> Result<Option<Vec<u8>>>) -> Result<GtfsFeed> {
    let mut get = |name: &str| fetch(name)?.ok_or_else(|| Error::MissingFile(name.into()));
    let agency = get("agency.txt")?;
    let stops = get("stops.txt")?;
    let routes = get("routes.txt")?;
    let trips = get("trips.txt")?;
    let stop_times = get("stop_times.txt")?;
    let calendar = get("calendar.txt")?;
    Ok(GtfsFeed {
        agency: parse_table("agency.txt", &agency)?,
        stops: parse_table("stops.txt", &stops)?,
        routes: parse_table("routes.txt", &routes)?,
        trips: parse_table("trips.txt", &trips)?,
        stop_times: parse_table("stop_times.txt", &stop_times)?,
        calendar: parse_table("calendar.txt", &calendar)?,
    })
}

pub fn parse_zip(bytes: &[u8]) -> Result<GtfsFeed> {
    let mut archive = ZipArchive::new(Cursor::new(bytes))?;
    parse_files(|name| match archive.by_name(name) {
        Ok(mut entry) => {
            let mut body = Vec::new();
            entry.read_to_end(&mut body)?;
            Ok(Some(body))
        }
        Err(zip::result::ZipError::FileNotFound) => Ok(None),
        Err(e) => Err(e.into()),
    })
}

/// Read a feed from a directory of `.txt` files or from a zip archive.
pub fn parse_feed(path: &Path) -> Result<GtfsFeed> {
    if path.is_dir() {
        parse_files(|name| {
            let file = path.join(name);
            match std::fs::read(&file) {
                Ok(body) => Ok(Some(body)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(Error::io(file, e)),
            }
        })
    } else {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parse_zip(&bytes)
    }
}
