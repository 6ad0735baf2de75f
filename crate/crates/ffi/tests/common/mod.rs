use chrono::{Duration, NaiveDateTime};

use bustrace::domain::{BusStop, FeatureTuple, ServiceLabel, StopPass, TransitGraph, Trip};
use bustrace::gtfs::{build_feed, Agency, GtfsFeed};
use bustrace::ingest::fit_scaler_tuples;
use bustrace::neuralnet::{HeadMode, TrainConfig};
use bustrace::predictor::Model;
use bustrace::transitgraph::group_routes;

pub fn model(mode: HeadMode) -> Model {
    let config = TrainConfig { hidden_size: 4, k: 5, seed: 9, mode, ..Default::default() };
    let scaler = fit_scaler_tuples([FeatureTuple::new(42.34, 13.38, 0.0).unwrap(), FeatureTuple::new(42.37, 13.41, 40.0).unwrap()]).unwrap();
    Model::new(config.init_params(), scaler, config)
}

pub fn feed() -> GtfsFeed {
    let stops = vec![BusStop::new("S1", "Fontana Luminosa", 42.3521, 13.4003).unwrap(), BusStop::new("S2", "Collemaggio", 42.3448, 13.4051).unwrap()];
    let start = NaiveDateTime::parse_from_str("2020-10-01 07:00:00", "%Y-%m-%d %H:%M:%S").unwrap();
    let trips = vec![Trip {
        trip_id: "T1".into(),
        unit_id: "100001".into(),
        stops: vec![StopPass { stop_id: "S1".into(), time: start }, StopPass { stop_id: "S2".into(), time: start + Duration::minutes(6) }],
        service: ServiceLabel::for_date(start.date()),
    }];
    let routes = group_routes(&trips, &stops);
    build_feed(&TransitGraph { stops, trips, routes }, &Agency::default()).unwrap()
}
