use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

use super::*;
use crate::domain::{parse_timestamp, BusStop, ServiceLabel, StopPass, TransitGraph, Trip};
use crate::error::Error;
use crate::transitgraph::group_routes;

fn text(feed: &GtfsFeed, file: &str) -> String {
    let files = render(feed).unwrap();
    String::from_utf8(files.into_iter().find(|(n, _)| *n == file).unwrap().1).unwrap()
}

fn sample_graph() -> TransitGraph {
    let stops = vec![BusStop::new("H1", "Università Coppito", 42.367679, 13.352023).unwrap(), BusStop::new("H2", "Via Roma", 42.36, 13.36).unwrap()];
    let mk = |id: &str, unit: &str, start: &str, seq: &[&str]| {
        let t = parse_timestamp(start).unwrap();
        let stops = seq.iter().enumerate().map(|(i, s)| StopPass { stop_id: s.to_string(), time: t + Duration::minutes(10 * i as i64) }).collect();
        Trip { trip_id: id.into(), unit_id: unit.into(), stops, service: ServiceLabel::for_date(t.date()) }
    };
    let trips = vec![mk("T1", "100001", "2020-10-03 23:55:00", &["H1", "H2"]), mk("T2", "100002", "2020-10-04 08:00:00", &["H2", "H1"])];
    let routes = group_routes(&trips, &stops);
    TransitGraph { stops, trips, routes }
}

#[test]
fn builds_a_valid_feed() {
    let feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    let report = validate(&feed);
    assert!(report.is_valid(), "{report}");
    assert_eq!(feed.routes.len(), 2);
    assert!(feed.routes.iter().all(|r| r.route_type == 3 && r.agency_id == "AMA"));

    // The Saturday trip runs past midnight and keeps counting hours.
    let times: Vec<String> = feed.stop_times.iter().map(|s| s.arrival_time.to_string()).collect();
    assert_eq!(times, ["23:55:00", "24:05:00", "08:00:00", "08:10:00"]);
    assert_eq!(feed.trips[0].service_id, "Feriali");
    assert_eq!(feed.trips[1].service_id, "Festivi");
    assert_eq!(feed.trips[0].trip_headsign, "Via Roma");
    assert_eq!(feed.trips[1].block_id, "100002");

    let cal = &feed.calendar;
    assert_eq!(cal.len(), 2);
    assert_eq!(cal[0].days(), [true, true, true, true, true, true, false]);
    assert_eq!(cal[1].days(), [false, false, false, false, false, false, true]);
    assert_eq!(cal[1].start_date, NaiveDate::from_ymd_opt(2020, 10, 4).unwrap());
    assert!(text(&feed, "calendar.txt").contains("Festivi,0,0,0,0,0,0,1,20201004,20201004"));
}

#[test]
fn reference_rows_are_written_verbatim() {
    let feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    assert_eq!(
        text(&feed, "agency.txt"),
        "agency_id,agency_name,agency_url,agency_timezone\nAMA,Azienda Mobilità L'Aquila,http://www.ama.laquila.it/,Europe/Rome\n"
    );
    assert!(text(&feed, "stops.txt").contains("\nH1,Università Coppito,42.367679,13.352023,0,\n"));
    let back = parse_zip(&package(&feed).unwrap()).unwrap();
    assert_eq!(back.stops[0].stop_lat, 42.367679);
    assert_eq!(back.stops[0].stop_lon, 13.352023);
    assert_eq!(back, feed);
}

#[test]
fn empty_graph_has_nothing_to_export() {
    assert!(matches!(build_feed(&TransitGraph::default(), &Agency::default()), Err(Error::NothingToExport(_))));
}

#[test]
fn empty_feed_reports_no_routes_only() {
    let feed = GtfsFeed { agency: vec![Agency::default()], ..Default::default() };
    let report = validate(&feed);
    assert!(report.has_rule("NO_ROUTES"));
    assert!(!report.has_rule("ROUTE_NO_TRIPS"));
    assert!(report.to_string().contains("no routes"));
}

#[test]
fn detects_broken_references_and_order() {
    let mut feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    feed.stop_times[1].stop_id = "ZZ".into();
    feed.stop_times[3].arrival_time = GtfsTime::hms(7, 0, 0);
    feed.stop_times[3].departure_time = GtfsTime::hms(7, 0, 0);
    feed.trips[0].service_id = "Never".into();
    feed.stops[1].stop_lat = 91.0;
    let report = validate(&feed);
    for rule in ["FK_STOP", "TIME_TRAVEL", "FK_SERVICE", "COORDINATE_RANGE"] {
        assert!(report.has_rule(rule), "{rule} missing from\n{report}");
    }
    let fk = report.findings.iter().find(|f| f.rule == "FK_STOP").unwrap();
    assert_eq!(fk.location, "stop_times.txt:3");

    let mut feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    feed.stop_times.remove(3);
    feed.stop_times[0].stop_sequence = 5;
    feed.routes.push(GtfsRoute { route_id: "L9".into(), route_type: 3, route_short_name: "9".into(), ..feed.routes[0].clone() });
    let report = validate(&feed);
    for rule in ["TRIP_STOP_COUNT", "STOP_SEQUENCE", "ROUTE_NO_TRIPS"] {
        assert!(report.has_rule(rule), "{rule} missing from\n{report}");
    }
}

#[test]
fn parsing_tolerates_extra_columns_and_reports_missing_files() {
    let feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    let files = render(&feed).unwrap();
    let with_extra = parse_files(|name| {
        let body = files.iter().find(|(n, _)| *n == name).map(|(_, b)| String::from_utf8(b.clone()).unwrap());
        Ok(body.map(|b| {
            let mut out = String::from("\u{feff}");
            for (i, line) in b.lines().enumerate() {
                out.push_str(line);
                out.push_str(if i == 0 { ",wheelchair_boarding\n" } else { ",1\n" });
            }
            out.into_bytes()
        }))
    })
    .unwrap();
    assert_eq!(with_extra, feed);

    let missing = parse_files(|name| Ok(files.iter().find(|(n, _)| *n == name && name != "calendar.txt").map(|(_, b)| b.clone())));
    assert!(matches!(missing, Err(Error::MissingFile(f)) if f == "calendar.txt"));
}

#[test]
fn directory_and_archive_round_trip() {
    let feed = build_feed(&sample_graph(), &Agency::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_feed(&feed, &dir.path().join("feed")).unwrap();
    assert_eq!(parse_feed(&dir.path().join("feed")).unwrap(), feed);

    let zip = package(&feed).unwrap();
    assert_eq!(zip, package(&feed).unwrap());
    let path = dir.path().join("gtfs.zip");
    std::fs::write(&path, &zip).unwrap();
    assert_eq!(parse_feed(&path).unwrap(), feed);
}

fn id() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_]{1,6}"
}

fn name() -> impl Strategy<Value = String> {
    "[ -~àèéìòùÀ]{0,14}"
}

fn date() -> impl Strategy<Value = NaiveDate> {
    (730_000i32..740_000).prop_map(|d| NaiveDate::from_num_days_from_ce_opt(d).unwrap())
}

fn time() -> impl Strategy<Value = GtfsTime> {
    (0u32..200_000).prop_map(GtfsTime)
}

prop_compose! {
    fn any_feed()(
        agency in proptest::collection::vec((id(), name(), name(), name()), 0..3),
        stops in proptest::collection::vec((id(), name(), -90.0f64..=90.0, -180.0f64..=180.0, 0i32..3, prop_oneof![Just(String::new()), id()]), 0..8),
        routes in proptest::collection::vec((id(), id(), name(), name(), 0i32..8), 0..5),
        trips in proptest::collection::vec((id(), id(), id(), name(), name()), 0..6),
        stop_times in proptest::collection::vec((id(), time(), time(), id(), 0u32..100), 0..12),
        calendar in proptest::collection::vec((id(), proptest::array::uniform7(any::<bool>()), date(), date()), 0..3),
    ) -> GtfsFeed {
        GtfsFeed {
            agency: agency.into_iter().map(|(agency_id, agency_name, agency_url, agency_timezone)| Agency { agency_id, agency_name, agency_url, agency_timezone }).collect(),
            stops: stops.into_iter().map(|(stop_id, stop_name, stop_lat, stop_lon, location_type, parent_station)| GtfsStop { stop_id, stop_name, stop_lat, stop_lon, location_type, parent_station }).collect(),
            routes: routes.into_iter().map(|(route_id, agency_id, route_short_name, route_long_name, route_type)| GtfsRoute { route_id, agency_id, route_short_name, route_long_name, route_type }).collect(),
            trips: trips.into_iter().map(|(trip_id, route_id, service_id, trip_headsign, block_id)| GtfsTrip { trip_id, route_id, service_id, trip_headsign, block_id }).collect(),
            stop_times: stop_times.into_iter().map(|(trip_id, arrival_time, departure_time, stop_id, stop_sequence)| StopTime { trip_id, arrival_time, departure_time, stop_id, stop_sequence }).collect(),
            calendar: calendar.into_iter().map(|(service_id, d, start_date, end_date)| Calendar {
                service_id, monday: d[0], tuesday: d[1], wednesday: d[2], thursday: d[3], friday: d[4], saturday: d[5], sunday: d[6], start_date, end_date,
            }).collect(),
        }
    }
}

prop_compose! {
    fn any_graph()(
        n_stops in 2usize..8,
        raw_trips in proptest::collection::vec(
            (0i64..14 * 86_400, proptest::collection::vec((0usize..8, 1i64..900), 2..7), 0u32..4),
            1..12,
        ),
    ) -> TransitGraph {
        let t0 = parse_timestamp("2020-10-01 00:00:00").unwrap();
        let stops: Vec<BusStop> = (0..n_stops)
            .map(|i| BusStop::new(format!("S{}", i + 1), format!("Fermata {}", i + 1), 42.3 + 0.001 * i as f64, 13.4 - 0.002 * i as f64).unwrap())
            .collect();
        let trips: Vec<Trip> = raw_trips.iter().enumerate().map(|(n, (start, hops, unit))| {
            let mut t = t0 + Duration::seconds(*start);
            let passes = hops.iter().map(|&(s, dt)| {
                t += Duration::seconds(dt);
                StopPass { stop_id: stops[s % n_stops].stop_id.clone(), time: t }
            }).collect::<Vec<_>>();
            Trip { trip_id: format!("T{}", n + 1), unit_id: format!("{}", 100_001 + unit), service: ServiceLabel::for_date(passes[0].time.date()), stops: passes }
        }).collect();
        let routes = group_routes(&trips, &stops);
        TransitGraph { stops, trips, routes }
    }
}

proptest! {
    #[test]
    fn feeds_survive_write_and_parse(feed in any_feed()) {
        let files = render(&feed).unwrap();
        let back = parse_files(|name| Ok(files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.clone()))).unwrap();
        prop_assert_eq!(back, feed);
    }

    #[test]
    fn built_feeds_validate(graph in any_graph()) {
        graph.validate().unwrap();
        let feed = build_feed(&graph, &Agency::default()).unwrap();
        let report = validate(&feed);
        prop_assert!(report.is_valid(), "{}", report);
        prop_assert_eq!(feed.trips.len(), graph.trips.len());
    }
}
