use crate::domain::BusStop;
use crate::error::Result;
use crate::geo::distance_m;

/// A canonical stop recovered from many noisy stop observations.
#[derive(Debug, Clone, PartialEq)]
pub struct StopCluster {
    pub stop_id: String,
    pub latitude: f64,
    pub longitude: f64,
    /// Indices of the input points assigned to this cluster, ascending.
    pub members: Vec<usize>,
}

impl StopCluster {
    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn to_bus_stop(&self) -> Result<BusStop> {
        BusStop::new(self.stop_id.clone(), format!("Stop {}", &self.stop_id[1..]), self.latitude, self.longitude)
    }
}

struct Acc {
    members: Vec<usize>,
    lat: f64,
    lon: f64,
}

impl Acc {
    fn centroid(&self, points: &[(f64, f64)]) -> (f64, f64) {
        let n = self.members.len() as f64;
        let (lat, lon) = self.members.iter().fold((0.0, 0.0), |(a, b), &i| (a + points[i].0, b + points[i].1));
        (lat / n, lon / n)
    }
}

/// Greedy radius clustering of `(lat, lon)` points.
///
/// Points are visited in input order; each joins the first cluster whose
/// running centroid lies within `radius_m`, or seeds a new one. Members that
/// end up farther than `radius_m` from their final centroid are then dropped
/// (repeatedly, as the centroid moves), so every surviving member is within
/// the radius. Clusters smaller than `min_cluster_size` are discarded and
/// the rest are numbered `S1, S2, ...` by their earliest member.
pub fn cluster_stops(points: &[(f64, f64)], radius_m: f64, min_cluster_size: usize) -> Vec<StopCluster> {
    let mut clusters: Vec<Acc> = Vec::new();
    for (i, &(lat, lon)) in points.iter().enumerate() {
        match clusters.iter_mut().find(|c| distance_m(c.lat, c.lon, lat, lon) <= radius_m) {
            Some(c) => {
                let n = c.members.len() as f64;
                c.lat += (lat - c.lat) / (n + 1.0);
                c.lon += (lon - c.lon) / (n + 1.0);
                c.members.push(i);
            }
            None => clusters.push(Acc { members: vec![i], lat, lon }),
        }
    }

    let mut out: Vec<StopCluster> = Vec::new();
    for mut c in clusters {
        let mut centre = c.centroid(points);
        loop {
            let before = c.members.len();
            c.members.retain(|&i| distance_m(centre.0, centre.1, points[i].0, points[i].1) <= radius_m);
            if c.members.is_empty() || c.members.len() == before {
                break;
            }
            centre = c.centroid(points);
        }
        if c.members.len() >= min_cluster_size.max(1) {
            out.push(StopCluster { stop_id: String::new(), latitude: centre.0, longitude: centre.1, members: c.members });
        }
    }
    out.sort_by_key(|c| c.members[0]);
    for (n, c) in out.iter_mut().enumerate() {
        c.stop_id = format!("S{}", n + 1);
    }
    out
}

/// Index of the nearest cluster within `radius_m`, if any.
pub fn nearest_cluster(clusters: &[StopCluster], lat: f64, lon: f64, radius_m: f64) -> Option<usize> {
    clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (i, distance_m(lat, lon, c.latitude, c.longitude)))
        .filter(|&(_, d)| d <= radius_m)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}
