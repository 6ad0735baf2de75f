use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bustrace::gtfs::{package, parse_zip};
use bustrace::predictor::Model;
use bustrace::simulator::{read_stops_csv, DESK_CONFIG};

fn bustrace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bustrace")).args(args).output().unwrap()
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bustrace(args);
    assert!(out.status.success(), "bustrace {args:?}\n{}", text(&out));
    out
}

/// The desk scenario cut down to two hours and a tiny network.
fn small_scenario(dir: &Path) -> PathBuf {
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    for n in 1..=3 {
        let name = format!("route{n}.csv");
        std::fs::copy(scenarios.join(&name), dir.join(&name)).unwrap();
    }
    let cfg = DESK_CONFIG
        .replace("sim.duration_h = 48", "sim.duration_h = 2")
        .replace("train.hidden = 32", "train.hidden = 4")
        .replace("train.epochs = 200", "train.epochs = 2")
        .replace("train.mode = stop", "train.mode = regression");
    let path = dir.join("small.cfg");
    std::fs::write(&path, cfg).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stages_compose_through_files() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_scenario(d);
    let cfg = s(&cfg);

    run_ok(&["simulate", "--config", cfg, "--out", s(&d.join("sim"))]);
    for f in ["gps.csv", "truth_stops.csv", "truth_trips.csv", "manifest.txt"] {
        assert!(d.join("sim").join(f).exists(), "{f}");
    }
    let gps = d.join("sim/gps.csv");

    run_ok(&["clean", s(&gps), "--config", cfg, "--out", s(&d.join("clean"))]);
    run_ok(&["clean", s(&gps), "--config", cfg, "--out", s(&d.join("clean2"))]);
    let cleaned = d.join("clean/cleaned.csv");
    assert_eq!(std::fs::read(&cleaned).unwrap(), std::fs::read(d.join("clean2/cleaned.csv")).unwrap());
    let report = std::fs::read_to_string(d.join("clean/cleaning_report.txt")).unwrap();
    assert!(report.contains("duplicates"), "{report}");

    run_ok(&["train", s(&cleaned), "--config", cfg, "--out", s(&d.join("train"))]);
    let model = d.join("train/model.bin");
    let trace = std::fs::read_to_string(d.join("train/loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3, "{trace}");

    run_ok(&["evaluate", s(&cleaned), "--model", s(&model), "--config", cfg, "--out", s(&d.join("eval"))]);
    let evaluation = std::fs::read_to_string(d.join("eval/evaluation.txt")).unwrap();
    assert!(evaluation.contains("rmse_lat"), "{evaluation}");
    assert!(d.join("eval/pred_vs_real.csv").exists());

    run_ok(&["predict", s(&cleaned), "--model", s(&model), "--config", cfg, "--out", s(&d.join("pred"))]);
    assert!(std::fs::read_to_string(d.join("pred/predictions.csv")).unwrap().starts_with("unit_id,time,pred_lat,pred_lon,pred_speed\n"));
    assert!(d.join("pred/stop_points.csv").exists());

    // Stop points standing in for a good stop model: sixty sightings of every true stop.
    let truth = read_stops_csv(std::fs::File::open(d.join("sim/truth_stops.csv")).unwrap()).unwrap();
    let mut points = String::from("latitude,longitude\n");
    for stop in &truth {
        for i in 0..60 {
            let jitter = (i % 5) as f64 * 1e-5 - 2e-5;
            points.push_str(&format!("{},{}\n", stop.latitude + jitter, stop.longitude - jitter));
        }
    }
    let points_path = d.join("points.csv");
    std::fs::write(&points_path, points).unwrap();
    run_ok(&["export-gtfs", s(&cleaned), "--stop-points", s(&points_path), "--config", cfg, "--out", s(&d.join("gtfs"))]);
    let zip = d.join("gtfs/gtfs.zip");
    let out = run_ok(&["validate-gtfs", s(&zip), "--out", s(&d.join("check"))]);
    assert!(text(&out).starts_with("errors: 0\n"), "{}", text(&out));
    assert!(std::fs::read_to_string(d.join("check/validation.txt")).unwrap().starts_with("errors: 0\n"));

    let manifest = std::fs::read_to_string(d.join("gtfs/manifest.txt")).unwrap();
    assert!(manifest.contains("command=export-gtfs"), "{manifest}");
    assert!(manifest.contains("output.gtfs.zip"), "{manifest}");
}

#[test]
fn dangling_reference_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_scenario(d);
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(&d.join("sim"))]);
    let truth = read_stops_csv(std::fs::File::open(d.join("sim/truth_stops.csv")).unwrap()).unwrap();
    let points: String = std::iter::once("latitude,longitude\n".to_string())
        .chain(truth.iter().flat_map(|t| std::iter::repeat_n(format!("{},{}\n", t.latitude, t.longitude), 60)))
        .collect();
    std::fs::write(d.join("points.csv"), points).unwrap();
    run_ok(&["export-gtfs", s(&d.join("sim/gps.csv")), "--stop-points", s(&d.join("points.csv")), "--config", s(&cfg), "--out", s(&d.join("gtfs"))]);

    let mut feed = parse_zip(&std::fs::read(d.join("gtfs/gtfs.zip")).unwrap()).unwrap();
    feed.stop_times[0].stop_id = "NOWHERE".into();
    let bad = d.join("bad.zip");
    std::fs::write(&bad, package(&feed).unwrap()).unwrap();

    let out = bustrace(&["validate-gtfs", s(&bad), "--out", s(&d.join("check"))]);
    assert!(!out.status.success());
    let printed = text(&out);
    assert!(printed.contains("ERROR FK_STOP stop_times.txt:2"), "{printed}");
    assert!(printed.contains("stage `validate-gtfs` failed"), "{printed}");
}

#[test]
fn zero_epochs_writes_the_initial_model() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let cfg = small_scenario(d);
    run_ok(&["simulate", "--config", s(&cfg), "--out", s(&d.join("sim"))]);
    run_ok(&["train", s(&d.join("sim/gps.csv")), "--config", s(&cfg), "--epochs", "0", "--seed", "7", "--out", s(&d.join("train"))]);

    let model = Model::from_bytes(&std::fs::read(d.join("train/model.bin")).unwrap()).unwrap();
    assert_eq!(model.config.epochs, 0);
    assert_eq!(model.config.seed, 7);
    assert_eq!(model.params, model.config.init_params());
    assert_eq!(std::fs::read_to_string(d.join("train/loss_trace.csv")).unwrap(), "epoch,train_loss,val_loss\n");
}

#[test]
fn usage_errors_exit_nonzero() {
    let out = bustrace(&["frobnicate"]);
    assert!(!out.status.success());
    assert!(text(&out).contains("Usage"), "{}", text(&out));

    let out = bustrace(&["simulate", "--no-such-flag"]);
    assert!(!out.status.success());
    assert!(text(&out).contains("--no-such-flag"));

    let tmp = tempfile::tempdir().unwrap();
    let out = bustrace(&["train", "/nonexistent/gps.csv", "--out", s(tmp.path())]);
    assert!(!out.status.success());
    let printed = text(&out);
    assert!(printed.contains("stage `") && printed.contains("/nonexistent/gps.csv"), "{printed}");
}
