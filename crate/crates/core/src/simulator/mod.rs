//! Synthetic fleets with exact ground truth.

mod fleet;
mod kinematics;
mod script;
mod truth;

pub use fleet::{simulate, DWELL_SPEED_KMH, FIRST_UNIT_ID};
pub use kinematics::ACCELERATION;
pub use script::{RouteScript, SimConfig};
pub use truth::{read_stops_csv, write_stops_csv, write_trips_csv, Glitch, GroundTruth, RecordTruth};

use crate::config::KeyValues;
use crate::error::Result;

/// Text of the bundled desk scenario configuration.
pub const DESK_CONFIG: &str = include_str!("../../scenarios/desk.cfg");

const DESK_FILES: [(&str, &str); 3] = [
    ("route1.csv", include_str!("../../scenarios/route1.csv")),
    ("route2.csv", include_str!("../../scenarios/route2.csv")),
    ("route3.csv", include_str!("../../scenarios/route3.csv")),
];

/// The bundled desk scenario with its route files served from memory.
pub fn desk_config() -> Result<KeyValues> {
    Ok(KeyValues::parse(DESK_CONFIG, "desk.cfg")?.with_embedded(&DESK_FILES))
}
