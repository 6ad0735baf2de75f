//! From stop observations and vehicle traces to stops, trips and routes.

mod cluster;
mod group;
mod segment;

pub use cluster::{cluster_stops, nearest_cluster, StopCluster};
pub use group::group_routes;
pub use segment::{segment_trips, SegmentConfig};

use crate::domain::{GpsRecord, TransitGraph};
use crate::error::Result;

/// Clustering and segmentation settings for [`build_graph`].
#[derive(Debug, Clone, PartialEq)]
pub struct GraphConfig {
    pub cluster_radius_m: f64,
    pub min_cluster_size: usize,
    pub segment: SegmentConfig,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self { cluster_radius_m: 25.0, min_cluster_size: 3, segment: SegmentConfig::default() }
    }
}

/// Cluster `stop_points`, segment `trace` against the clusters and group the
/// trips. Only stops visited by at least one trip are kept.
pub fn build_graph(stop_points: &[(f64, f64)], trace: &[GpsRecord], cfg: &GraphConfig) -> Result<TransitGraph> {
    let clusters = cluster_stops(stop_points, cfg.cluster_radius_m, cfg.min_cluster_size);
    let trips = segment_trips(trace, &clusters, &cfg.segment, None)?;
    let used: std::collections::HashSet<&str> = trips.iter().flat_map(|t| t.stop_ids()).collect();
    let stops = clusters.iter().filter(|c| used.contains(c.stop_id.as_str())).map(StopCluster::to_bus_stop).collect::<Result<Vec<_>>>()?;
    let routes = group_routes(&trips, &stops);
    let graph = TransitGraph { stops, trips, routes };
    graph.validate()?;
    Ok(graph)
}
