use std::io::{Read, Write};

use crate::domain::{format_timestamp, parse_timestamp, GpsRecord};
use crate::error::{Error, Result};

use super::CleaningReport;

#[derive(Debug, Clone, Default)]
pub struct ParsedCsv {
    pub records: Vec<GpsRecord>,
    /// Stop flags, when the file carries an `is_stop` column.
    pub stop_flags: Option<Vec<bool>>,
    pub report: CleaningReport,
}

fn normalize_header(h: &str) -> String {
    h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase().replace([' ', '_'], "")
}

fn find_column(headers: &[String], names: &[&str], canonical: &str) -> Result<usize> {
    headers.iter().position(|h| names.contains(&h.as_str())).ok_or_else(|| Error::MissingColumn(canonical.to_string()))
}

/// Parse tracker CSV. Column order is free; malformed rows are counted and skipped.
pub fn parse_csv<R: Read>(source: R) -> Result<ParsedCsv> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(normalize_header).collect();
    let lat = find_column(&headers, &["latitude", "lat"], "latitude")?;
    let lon = find_column(&headers, &["longitude", "lon", "lng"], "longitude")?;
    let speed = find_column(&headers, &["speed", "sp"], "speed")?;
    let unit = find_column(&headers, &["unitid", "unit"], "unit_id")?;
    let time = find_column(&headers, &["time", "timestamp"], "time")?;
    let stop = headers.iter().position(|h| h == "isstop");

    let mut out = ParsedCsv { stop_flags: stop.map(|_| Vec::new()), ..Default::default() };
    let mut row = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
            Err(_) => {
                out.report.rows_read += 1;
                out.report.removed_malformed += 1;
                continue;
            }
        }
        out.report.rows_read += 1;
        let parsed = (|| -> Option<(GpsRecord, Option<bool>)> {
            let num = |i: usize| row.get(i)?.parse::<f64>().ok();
            let ts = parse_timestamp(row.get(time)?).ok()?;
            let rec = GpsRecord::new(num(lat)?, num(lon)?, num(speed)?, row.get(unit)?, ts).ok()?;
            let flag = match stop {
                Some(i) => Some(match row.get(i)? {
                    "1" => true,
                    "0" => false,
                    _ => return None,
                }),
                None => None,
            };
            Some((rec, flag))
        })();
        match parsed {
            Some((rec, flag)) => {
                out.records.push(rec);
                if let (Some(flags), Some(flag)) = (out.stop_flags.as_mut(), flag) {
                    flags.push(flag);
                }
            }
            None => out.report.removed_malformed += 1,
        }
    }
    out.report.rows_kept = out.records.len();
    Ok(out)
}

/// Write records in the ingest schema, with an `is_stop` column when flags are given.
pub fn write_csv<W: Write>(records: &[GpsRecord], stop_flags: Option<&[bool]>, sink: W) -> Result<()> {
    if let Some(flags) = stop_flags {
        if flags.len() != records.len() {
            return Err(Error::Dimension(format!("{} stop flags for {} records", flags.len(), records.len())));
        }
    }
    let mut w = csv::Writer::from_writer(sink);
    if stop_flags.is_some() {
        w.write_record(["latitude", "longitude", "speed", "unit_id", "time", "is_stop"])?;
    } else {
        w.write_record(["latitude", "longitude", "speed", "unit_id", "time"])?;
    }
    for (i, r) in records.iter().enumerate() {
        let mut fields = vec![r.latitude.to_string(), r.longitude.to_string(), r.speed.to_string(), r.unit_id.clone(), format_timestamp(&r.timestamp)];
        if let Some(flags) = stop_flags {
            fields.push(if flags[i] { "1".into() } else { "0".into() });
        }
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}
