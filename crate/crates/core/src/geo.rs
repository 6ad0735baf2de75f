//! Equirectangular approximations; adequate at city scale.

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

pub fn meters_per_degree_lat() -> f64 {
    EARTH_RADIUS_M * std::f64::consts::PI / 180.0
}

pub fn meters_per_degree_lon(lat: f64) -> f64 {
    meters_per_degree_lat() * lat.to_radians().cos()
}

/// Distance in meters between two (lat, lon) points in degrees.
pub fn distance_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let mid = 0.5 * (lat1 + lat2);
    let dy = (lat2 - lat1) * meters_per_degree_lat();
    let dx = (lon2 - lon1) * meters_per_degree_lon(mid);
    dx.hypot(dy)
}

/// Offset a point by (east, north) meters.
pub fn offset(lat: f64, lon: f64, east_m: f64, north_m: f64) -> (f64, f64) {
    (lat + north_m / meters_per_degree_lat(), lon + east_m / meters_per_degree_lon(lat))
}
