use std::collections::HashMap;

use crate::domain::{BusStop, GpsRecord};
use crate::geo::{distance_m, meters_per_degree_lat, meters_per_degree_lon};

/// Flag each record lying within `radius_m` of any stop.
pub fn inject_stop_labels(records: &[GpsRecord], stops: &[BusStop], radius_m: f64) -> Vec<bool> {
    if stops.is_empty() || records.is_empty() {
        return vec![false; records.len()];
    }
    // Grid with cells at least `radius_m` wide, so neighbours are within one cell.
    let ref_lat = stops.iter().map(|s| s.latitude.abs()).fold(0.0, f64::max).min(89.0);
    let cell_lat = (radius_m / meters_per_degree_lat()).max(1e-9);
    let cell_lon = (radius_m / meters_per_degree_lon(ref_lat)).max(1e-9);
    let key = |lat: f64, lon: f64| ((lat / cell_lat).floor() as i64, (lon / cell_lon).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, s) in stops.iter().enumerate() {
        grid.entry(key(s.latitude, s.longitude)).or_default().push(i);
    }
    records
        .iter()
        .map(|r| {
            let (ky, kx) = key(r.latitude, r.longitude);
            (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    grid.get(&(ky + dy, kx + dx))
                        .is_some_and(|cands| cands.iter().any(|&i| distance_m(r.latitude, r.longitude, stops[i].latitude, stops[i].longitude) <= radius_m))
                })
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_timestamp;

    fn rec(lat: f64, lon: f64) -> GpsRecord {
        GpsRecord::new(lat, lon, 10.0, "u", parse_timestamp("2020-01-01 00:00:00").unwrap()).unwrap()
    }

    #[test]
    fn exact_and_far() {
        let stops = vec![BusStop::new("H1", "Università Coppito", 42.367679, 13.352023).unwrap()];
        let flags = inject_stop_labels(&[rec(42.367679, 13.352023), rec(42.457679, 13.352023)], &stops, 25.0);
        assert_eq!(flags, vec![true, false]);
    }

    #[test]
    fn no_stops_means_no_flags() {
        assert_eq!(inject_stop_labels(&[rec(42.0, 13.0)], &[], 25.0), vec![false]);
    }
}
