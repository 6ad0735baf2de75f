use std::collections::HashMap;

use crate::domain::{BusStop, Route, Trip};

/// Group trips by identical stop sequence, in order of first appearance.
///
/// Routes are `L1, L2, ...`; the long name joins the first and last stop
/// names and the short name is the route's ordinal. Direction matters, so
/// `[A, B, C]` and `[C, B, A]` are distinct routes.
pub fn group_routes(trips: &[Trip], stops: &[BusStop]) -> Vec<Route> {
    let name_of = |id: &str| stops.iter().find(|s| s.stop_id == id).map_or_else(|| id.to_string(), |s| s.name.clone());
    let mut index: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut routes: Vec<Route> = Vec::new();
    for trip in trips {
        let seq = trip.stop_ids();
        let next = routes.len();
        let r = *index.entry(seq.clone()).or_insert(next);
        if r == next {
            let first = seq.first().copied().unwrap_or_default();
            let last = seq.last().copied().unwrap_or_default();
            routes.push(Route {
                route_id: format!("L{}", next + 1),
                stop_ids: seq.iter().map(|s| s.to_string()).collect(),
                short_name: (next + 1).to_string(),
                long_name: format!("{} - {}", name_of(first), name_of(last)),
                trip_ids: Vec::new(),
            });
        }
        routes[r].trip_ids.push(trip.trip_id.clone());
    }
    routes
}
