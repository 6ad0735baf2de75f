//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Four trainings on the bundled desk scenario dominate the runtime: two
//! regression runs at different learning rates and two identical full
//! pipeline runs in stop mode. Artifacts of the pipeline runs are kept under
//! the cargo target directory for inspection.

use std::path::PathBuf;
use std::time::Instant;

use chrono::{Duration, NaiveDate};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bustrace::domain::{BusStop, ServiceLabel, StopPass, TransitGraph, Trip};
use bustrace::geo::distance_m;
use bustrace::gtfs::{build_feed, package, parse_feed, parse_zip, validate, write_feed, Agency};
use bustrace::ingest::{classify, clean, Verdict};
use bustrace::neuralnet::{backward, forward, loss, HeadMode, LstmParams, Sample, Target, TrainingTrace};
use bustrace::pipeline::{block_stop_predictions, evaluate_model, prepare, run_pipeline, train_model, Overrides, PipelineConfig, PipelineOutcome};
use bustrace::predictor::{predict_next, EvaluationReport, Model};
use bustrace::simulator::{simulate, Glitch};
use bustrace::transitgraph::group_routes;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("[{}] {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, name: &str, detail: String) {
        println!("[INFO] {id} {name}: {detail}");
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Relative error of an analytic gradient `a` against a difference quotient `n`.
///
/// Rounding limits a central difference of a loss near `loss` to an absolute
/// resolution of about `EPSILON * loss / eps`, so gradients smaller than that
/// resolution divided by `rtol` are judged against that floor instead of
/// their own magnitude.
fn relative_error(a: f64, n: f64, loss: f64, eps: f64, rtol: f64) -> (f64, f64) {
    let floor = (f64::EPSILON * loss.abs().max(1.0) / (eps * rtol)).max(1e-6);
    ((a - n).abs() / a.abs().max(n.abs()).max(floor), floor)
}

fn gradient_check(report: &mut Report) {
    let started = Instant::now();
    let (eps, rtol) = (1e-5, 1e-5);
    let mut worst: f64 = 0.0;
    let mut widest_floor: f64 = 0.0;
    let mut networks = 0;
    let mut entries = 0;
    for hidden in [2, 4, 8] {
        for k in [3, 5] {
            for mode in [HeadMode::Regression, HeadMode::Stop] {
                for rep in 0..2u64 {
                    let seed = 1000 * hidden as u64 + 100 * k as u64 + 10 * rep + (mode == HeadMode::Stop) as u64;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let params = LstmParams::init_uniform(3, hidden, mode.output_size(), 0.5, &mut rng);
                    let inputs = Array2::from_shape_fn((k - 1, 3), |_| rng.random_range(0.0..1.0));
                    let coords = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
                    let stop = (mode == HeadMode::Stop).then(|| rng.random_bool(0.5));
                    let sample = Sample { inputs, target: Target { coords, stop } };
                    let at = |p: &LstmParams| loss(&forward(sample.inputs.view(), p).unwrap().outputs, &sample.target, mode).unwrap();

                    let (base, grads) = backward(std::slice::from_ref(&sample), &params, mode).unwrap();
                    let mut probe = params.clone();
                    for (t, analytic) in grads.tensors().iter().enumerate() {
                        for (j, &a) in analytic.iter().enumerate() {
                            let orig = probe.tensors()[t][j];
                            probe.tensors_mut()[t][j] = orig + eps;
                            let plus = at(&probe);
                            probe.tensors_mut()[t][j] = orig - eps;
                            let minus = at(&probe);
                            probe.tensors_mut()[t][j] = orig;
                            let (rel, floor) = relative_error(a, (plus - minus) / (2.0 * eps), base[0], eps, rtol);
                            worst = worst.max(rel);
                            widest_floor = widest_floor.max(floor);
                            entries += 1;
                        }
                    }
                    networks += 1;
                }
            }
        }
    }
    let elapsed = secs(started);
    report.line(
        "C1",
        "gradient check",
        networks >= 20 && worst < rtol && elapsed < 60.0,
        format!(
            "{networks} networks, {entries} entries, worst relative error {worst:.2e} (< 1e-5, magnitude floor at most {widest_floor:.1e}), {elapsed:.1} s (< 60 s)"
        ),
    );
}

fn cleaning(report: &mut Report) {
    let cfg = PipelineConfig::desk().unwrap();
    let sim = cfg.sim.clone().unwrap();
    let (records, truth) = simulate(&sim).unwrap();
    let verdicts = classify(&records, &cfg.clean);
    let mut counts = [[0usize; 2]; 3];
    for (tag, verdict) in truth.records.iter().zip(&verdicts) {
        let class = match tag.glitch {
            Glitch::None => 0,
            Glitch::Duplicate => 1,
            Glitch::ZeroSpeed => 2,
        };
        counts[class][(*verdict != Verdict::Kept) as usize] += 1;
    }
    let ratio = |c: [usize; 2]| c[1] as f64 / (c[0] + c[1]).max(1) as f64;
    let (clean_rows, dup, zero) = (ratio(counts[0]), ratio(counts[1]), ratio(counts[2]));
    report.line(
        "C9",
        "cleaning correctness",
        dup >= 0.99 && zero >= 0.95 && clean_rows < 0.005,
        format!(
            "{} rows at glitch rates {}/{}: duplicates removed {:.2}% of {} (>= 99%), zero-speed displaced removed {:.2}% of {} (>= 95%), clean rows removed {:.3}% of {} (< 0.5%)",
            records.len(),
            sim.duplicate_rate,
            sim.zero_speed_rate,
            100.0 * dup,
            counts[1][0] + counts[1][1],
            100.0 * zero,
            counts[2][0] + counts[2][1],
            100.0 * clean_rows,
            counts[0][0] + counts[0][1],
        ),
    );
}

const STOP_NAMES: [&str; 8] =
    ["Piazza Duomo", "Via Roma, 3", "Università Coppito", "Fontana \"Luminosa\"", "Collemaggio", "Stazione FS", "Ospedale San Salvatore", "Torrione"];

fn random_feed(rng: &mut ChaCha8Rng, n: usize) -> bustrace::gtfs::GtfsFeed {
    let stop_count = rng.random_range(2..12);
    let stops: Vec<BusStop> = (0..stop_count)
        .map(|i| {
            let name = format!("{} {}", STOP_NAMES[rng.random_range(0..STOP_NAMES.len())], i + 1);
            BusStop::new(format!("S{}", i + 1), name, rng.random_range(-80.0..80.0), rng.random_range(-179.0..179.0)).unwrap()
        })
        .collect();
    let day = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(rng.random_range(0..700));
    let trips: Vec<Trip> = (0..rng.random_range(1..8))
        .map(|t| {
            let len = rng.random_range(2..=stop_count.min(6));
            let mut order: Vec<usize> = (0..stop_count).collect();
            for i in 0..len {
                let j = rng.random_range(i..stop_count);
                order.swap(i, j);
            }
            let start = (day + Duration::days(rng.random_range(0..9))).and_hms_opt(0, 0, 0).unwrap() + Duration::seconds(rng.random_range(0..86_400));
            let mut time = start;
            let passes = order[..len]
                .iter()
                .map(|&s| {
                    let pass = StopPass { stop_id: stops[s].stop_id.clone(), time };
                    time += Duration::seconds(rng.random_range(30..900));
                    pass
                })
                .collect();
            Trip {
                trip_id: format!("T{}", t + 1),
                unit_id: format!("{}", 100001 + rng.random_range(0..4)),
                stops: passes,
                service: ServiceLabel::for_date(start.date()),
            }
        })
        .collect();
    let used: std::collections::HashSet<&str> = trips.iter().flat_map(|t| t.stop_ids()).collect();
    let stops: Vec<BusStop> = stops.iter().filter(|s| used.contains(s.stop_id.as_str())).cloned().collect();
    let routes = group_routes(&trips, &stops);
    let agency = Agency { agency_name: format!("Azienda, \"Mobilità\" {n}"), ..Agency::default() };
    build_feed(&TransitGraph { stops, trips, routes }, &agency).unwrap()
}

/// Round trips of randomized valid feeds. The pipeline feed is checked later.
fn random_feeds() -> (usize, usize, usize, usize) {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut valid, mut dir_ok, mut zip_ok, mut stable) = (0, 0, 0, 0);
    for n in 0..100 {
        let feed = random_feed(&mut rng, n);
        valid += validate(&feed).is_valid() as usize;
        let path = dir.path().join(format!("feed{n}"));
        write_feed(&feed, &path).unwrap();
        dir_ok += (parse_feed(&path).unwrap() == feed) as usize;
        let zip = package(&feed).unwrap();
        zip_ok += (parse_zip(&zip).unwrap() == feed) as usize;
        stable += (package(&feed).unwrap() == zip) as usize;
    }
    (valid, dir_ok, zip_ok, stable)
}

struct RegressionRun {
    model: Model,
    trace: TrainingTrace,
    evaluation: EvaluationReport,
    test_windows: Vec<Vec<bustrace::domain::FeatureTuple>>,
    seconds: f64,
}

fn regression_run(learning_rate: f64) -> RegressionRun {
    let started = Instant::now();
    let mut cfg = PipelineConfig::desk().unwrap();
    cfg.apply(&Overrides { mode: Some(HeadMode::Regression), learning_rate: Some(learning_rate), ..Default::default() }).unwrap();
    let (records, _) = simulate(cfg.sim.as_ref().unwrap()).unwrap();
    let (cleaned, _) = clean(&records, &cfg.clean);
    let prepared = prepare(&cleaned, None, &cfg).unwrap();
    let (model, trace) = train_model(&prepared, &cfg).unwrap();
    let (evaluation, _) = evaluate_model(&prepared.split.test, &model, None, &cfg).unwrap();
    let test_windows = prepared.split.test.iter().map(|b| b.features.clone()).collect();
    RegressionRun { model, trace, evaluation, test_windows, seconds: secs(started) }
}

fn losses(trace: &TrainingTrace) -> (f64, f64) {
    let last = trace.last().expect("at least one epoch");
    (last.train_loss, last.val_loss)
}

fn latency(report: &mut Report, run: &RegressionRun) {
    const PASSES: usize = 15_600;
    let mut total = 0.0;
    for i in 0..PASSES {
        let window = &run.test_windows[i % run.test_windows.len()];
        let t0 = Instant::now();
        let p = predict_next(window, &run.model).unwrap();
        total += secs(t0);
        std::hint::black_box(p);
    }
    let mean = total / PASSES as f64;
    report.line(
        "C5",
        "latency",
        mean <= 1e-3 && total <= 20.0,
        format!("{PASSES} single predictions with hidden {}: mean {mean:.3e} s (<= 1e-3), total {total:.3} s (<= 20 s)", run.model.params.hidden_size()),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let wide = Model::new(LstmParams::init_uniform(3, 400, 3, 0.08, &mut rng), run.model.scaler, run.model.config);
    let t0 = Instant::now();
    for window in run.test_windows.iter().cycle().take(500) {
        std::hint::black_box(predict_next(window, &wide).unwrap());
    }
    report.info("C5", "latency at hidden 400", format!("mean {:.3e} s over 500 predictions", secs(t0) / 500.0));
}

fn pipeline_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

fn pipeline_run(name: &str) -> (PipelineOutcome, PathBuf, f64) {
    let started = Instant::now();
    let cfg = PipelineConfig::desk().unwrap();
    let dir = pipeline_dir(name);
    let outcome = run_pipeline(&cfg, &dir).unwrap_or_else(|e| panic!("pipeline {name}: {e}"));
    (outcome, dir, secs(started))
}

fn stop_prediction(report: &mut Report, run: &PipelineOutcome, seconds: f64) {
    let eval = run.stop_evaluation.as_ref().expect("stop-mode run");
    let coverage = eval.covered_stops as f64 / eval.total_stops as f64;
    report.line(
        "C4",
        "stop prediction",
        coverage >= 0.9 && eval.rmse_lat <= 1e-3 && eval.rmse_lon <= 1e-3 && seconds < 900.0,
        format!(
            "{}/{} stops covered within 30 m ({:.0}% >= 90%), {} declared, stop RMSE lat {:.3e} lon {:.3e} (<= 1e-3), {seconds:.0} s (< 900 s)",
            eval.covered_stops,
            eval.total_stops,
            100.0 * coverage,
            eval.declared,
            eval.rmse_lat,
            eval.rmse_lon
        ),
    );

    let stops = &run.truth.as_ref().unwrap().stops;
    let far: Vec<_> = run
        .prepared
        .split
        .test
        .iter()
        .filter(|b| stops.iter().all(|s| distance_m(b.label.lat, b.label.lon, s.latitude, s.longitude) > 60.0))
        .cloned()
        .collect();
    let predictions = block_stop_predictions(&far, &run.model).unwrap();
    let below = predictions.iter().filter(|p| p.probability < 0.5).count();
    let share = below as f64 / predictions.len().max(1) as f64;
    report.line(
        "C4",
        "far-field windows",
        !predictions.is_empty() && share >= 0.95,
        format!("{below}/{} held-out windows ending over 60 m from every stop have stop probability < 0.5 ({:.1}% >= 95%)", predictions.len(), 100.0 * share),
    );
}

fn graph_recovery(report: &mut Report, run: &PipelineOutcome) {
    let truth = run.truth.as_ref().unwrap();
    let trips = run.graph.trips.len() as f64;
    let expected = truth.trips.len() as f64;
    let worst = run
        .graph
        .stops
        .iter()
        .map(|s| truth.stops.iter().map(|t| distance_m(s.latitude, s.longitude, t.latitude, t.longitude)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let routes = run.graph.routes.len();
    report.line(
        "C6",
        "transit-graph recovery",
        routes == 3 && (trips - expected).abs() <= 0.1 * expected && worst <= 10.0,
        format!(
            "{routes} routes (== 3), {trips} trips vs {expected} true ({:+.1}%, within 10%), {} stops, worst centroid {worst:.2} m from a true stop (<= 10 m)",
            100.0 * (trips - expected) / expected,
            run.graph.stops.len()
        ),
    );
}

fn main() {
    let mut report = Report { failures: 0 };
    let started = Instant::now();

    gradient_check(&mut report);
    cleaning(&mut report);

    let (valid, dir_ok, zip_ok, stable) = random_feeds();

    let fast = regression_run(5e-4);
    let slow = regression_run(1e-4);
    let (fast_train, fast_val) = losses(&fast.trace);
    let (slow_train, slow_val) = losses(&slow.trace);
    let (fast_gap, slow_gap) = ((fast_val - fast_train).abs(), (slow_val - slow_train).abs());
    report.line(
        "C2",
        "learning-rate comparison",
        fast_val < slow_val && fast_gap < slow_gap && fast.seconds + slow.seconds < 900.0,
        format!(
            "final val loss {fast_val:.4e} at 5e-4 < {slow_val:.4e} at 1e-4, train/val gap {fast_gap:.4e} < {slow_gap:.4e}, {:.0} s (< 900 s)",
            fast.seconds + slow.seconds
        ),
    );
    let spread = (fast_val - fast_train).abs() / fast_train.max(fast_val);
    report.line("C2", "good fit at 5e-4", spread <= 0.2, format!("train {fast_train:.4e} and val {fast_val:.4e} differ by {:.1}% (<= 20%)", 100.0 * spread));
    let e = &fast.evaluation;
    report.line(
        "C3",
        "trajectory accuracy",
        e.rmse_lat <= 2e-4 && e.rmse_lon <= 2e-4 && fast.seconds < 900.0,
        format!("held-out RMSE lat {:.3e} lon {:.3e} (<= 2e-4) over {} blocks, {:.0} s (< 900 s)", e.rmse_lat, e.rmse_lon, e.pairs.len(), fast.seconds),
    );
    latency(&mut report, &fast);

    let (a, dir_a, seconds_a) = pipeline_run("a");
    stop_prediction(&mut report, &a, seconds_a);
    graph_recovery(&mut report, &a);
    let zip_twice = package(&parse_zip(&a.gtfs_zip).unwrap()).unwrap() == a.gtfs_zip;
    report.line(
        "C7",
        "GTFS soundness",
        a.validation.is_valid() && valid == 100 && dir_ok == 100 && zip_ok == 100 && stable == 100 && zip_twice,
        format!(
            "pipeline feed {} errors {} warnings; random feeds: {valid}/100 valid, {dir_ok}/100 directory and {zip_ok}/100 zip round trips, {stable}/100 byte-stable zips; pipeline zip repackages identically: {zip_twice}",
            a.validation.error_count(),
            a.validation.warnings().count()
        ),
    );

    let (_, dir_b, _) = pipeline_run("b");
    let same = |f: &str| std::fs::read(dir_a.join(f)).unwrap() == std::fs::read(dir_b.join(f)).unwrap();
    let (model_same, zip_same) = (same("model.bin"), same("gtfs.zip"));
    report.line("C8", "pipeline determinism", model_same && zip_same, format!("model.bin identical: {model_same}, gtfs.zip identical: {zip_same}"));

    println!("acceptance: {} failed, artifacts in {}, {:.0} s total", report.failures, dir_a.parent().unwrap().display(), secs(started));
    if report.failures > 0 {
        std::process::exit(1);
    }
}
