use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bustrace::config::KeyValues;
use bustrace::domain::GpsRecord;
use bustrace::gtfs::{build_feed, package, parse_feed, validate};
use bustrace::ingest::{clean, parse_csv, window};
use bustrace::neuralnet::HeadMode;
use bustrace::pipeline::{
    csv_bytes, evaluate_model, load_inputs, prediction_csv, prepare, read_input, read_stop_points, run_pipeline_with, stop_points, stop_points_csv,
    stops_bytes, train_model, trips_bytes, Manifest, OutputDir, Overrides, PipelineConfig, StageContext, StageError,
};
use bustrace::predictor::{Model, RolloutMode};
use bustrace::simulator::{desk_config, simulate, DESK_CONFIG};
use bustrace::transitgraph::build_graph;
use bustrace::Error;

/// Reconstruct GTFS feeds from bus GPS traces.
#[derive(Parser, Debug)]
#[command(name = "bustrace", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Configuration file; the bundled desk scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `regression` or `stop`.
    #[arg(long, global = true)]
    mode: Option<HeadMode>,
    /// Block length (k - 1 inputs plus the label).
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    stride: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    batch: Option<usize>,
    #[arg(long, global = true)]
    hidden: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic fleet trace with ground truth.
    Simulate,
    /// Drop duplicate and zero-speed-displaced rows from a tracker CSV.
    Clean { input: PathBuf },
    /// Train a model on a cleaned trace.
    Train {
        input: PathBuf,
        /// Known stops, required in stop mode.
        #[arg(long)]
        stops: Option<PathBuf>,
    },
    /// Score a model on the held-out split of a cleaned trace.
    Evaluate {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        stops: Option<PathBuf>,
    },
    /// Predict every unit's trace and the stop points it suggests.
    Predict {
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// `autoregressive` or `teacher-forced`.
        #[arg(long, default_value = "teacher-forced")]
        rollout: RolloutMode,
    },
    /// Build a GTFS zip from a cleaned trace and predicted stop points.
    ExportGtfs {
        input: PathBuf,
        #[arg(long)]
        stop_points: PathBuf,
    },
    /// Check a GTFS zip or directory; exits nonzero when errors are found.
    ValidateGtfs { feed: PathBuf },
    /// Run every stage end to end.
    Pipeline,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Clean { .. } => "clean",
            Command::Train { .. } => "train",
            Command::Evaluate { .. } => "evaluate",
            Command::Predict { .. } => "predict",
            Command::ExportGtfs { .. } => "export-gtfs",
            Command::ValidateGtfs { .. } => "validate-gtfs",
            Command::Pipeline => "pipeline",
        }
    }
}

type StageResult<T = ()> = Result<T, StageError>;

fn load_config(g: &Global) -> StageResult<(PipelineConfig, String, Vec<u8>)> {
    let (kv, name, bytes) = match &g.config {
        Some(path) => {
            let bytes = read_input(path).stage("config")?;
            (KeyValues::load(path).stage("config")?, path.display().to_string(), bytes)
        }
        None => (desk_config().stage("config")?, "bundled:desk.cfg".to_string(), DESK_CONFIG.as_bytes().to_vec()),
    };
    let mut cfg = PipelineConfig::from_config(&kv).stage("config")?;
    let overrides =
        Overrides { seed: g.seed, mode: g.mode, k: g.k, stride: g.stride, epochs: g.epochs, learning_rate: g.lr, batch_size: g.batch, hidden_size: g.hidden };
    cfg.apply(&overrides).stage("config")?;
    Ok((cfg, name, bytes))
}

fn open_out(g: &Global, command: &str, cfg: &PipelineConfig, config_name: &str, config_bytes: &[u8]) -> StageResult<OutputDir> {
    let mut manifest = Manifest::new(command, cfg);
    manifest.input(config_name, config_bytes);
    OutputDir::create(&g.out, manifest).stage("setup")
}

fn read_trace(path: &Path, manifest: &mut Manifest, stage: &'static str) -> StageResult<Vec<GpsRecord>> {
    let bytes = read_input(path).stage(stage)?;
    manifest.input(&path.display().to_string(), &bytes);
    let mut records = parse_csv(bytes.as_slice()).stage(stage)?.records;
    bustrace::ingest::sort_records(&mut records);
    Ok(records)
}

fn read_model(path: &Path, manifest: &mut Manifest, stage: &'static str) -> StageResult<Model> {
    let bytes = read_input(path).stage(stage)?;
    manifest.input(&path.display().to_string(), &bytes);
    Model::from_bytes(&bytes).stage(stage)
}

/// Align window length and head with a saved model.
fn adopt_model(cfg: &mut PipelineConfig, model: &Model) {
    cfg.window.k = model.config.k;
    cfg.train = model.config;
    cfg.train.mode = model.mode();
}

fn run(cli: Cli) -> StageResult {
    let g = &cli.global;
    let (mut cfg, config_name, config_bytes) = load_config(g)?;
    let command = cli.command.name();

    if let Command::Pipeline = cli.command {
        let mut manifest = Manifest::new(command, &cfg);
        manifest.input(&config_name, &config_bytes);
        let outcome = run_pipeline_with(&cfg, &g.out, manifest)?;
        print!("{}", outcome.evaluation);
        if let Some(s) = &outcome.stop_evaluation {
            print!("{s}");
        }
        println!("stops={} trips={} routes={}", outcome.graph.stops.len(), outcome.graph.trips.len(), outcome.graph.routes.len());
        print!("{}", outcome.validation);
        return Ok(());
    }

    let mut dir = open_out(g, command, &cfg, &config_name, &config_bytes)?;
    let mut result = Ok(());
    match &cli.command {
        Command::Simulate => {
            let sim = cfg.sim.as_ref().ok_or(Error::Invalid { what: "simulation", reason: "the configuration defines no routes".into() }).stage("simulate")?;
            let (records, truth) = simulate(sim).stage("simulate")?;
            dir.write("gps.csv", &csv_bytes(&records).stage("simulate")?).stage("simulate")?;
            dir.write("truth_stops.csv", &stops_bytes(&truth.stops).stage("simulate")?).stage("simulate")?;
            dir.write("truth_trips.csv", &trips_bytes(&truth).stage("simulate")?).stage("simulate")?;
            println!("records={} stops={} trips={}", records.len(), truth.stops.len(), truth.trips.len());
        }
        Command::Clean { input } => {
            let acquired = load_inputs(input, None, &mut dir.manifest).stage("clean")?;
            let (kept, report) = clean(&acquired.records, &cfg.clean);
            let report = acquired.report.then(report);
            dir.write("cleaned.csv", &csv_bytes(&kept).stage("clean")?).stage("clean")?;
            dir.write("cleaning_report.txt", report.to_string().as_bytes()).stage("clean")?;
            print!("{report}");
        }
        Command::Train { input, stops } => {
            let acquired = load_inputs(input, stops.as_deref(), &mut dir.manifest).stage("train")?;
            let mut records = acquired.records;
            bustrace::ingest::sort_records(&mut records);
            let prepared = prepare(&records, acquired.stops.as_deref(), &cfg).stage("train")?;
            let (model, trace) = train_model(&prepared, &cfg).stage("train")?;
            dir.write("model.bin", &model.to_bytes()).stage("train")?;
            dir.write("loss_trace.csv", trace.to_csv().as_bytes()).stage("train")?;
            if let Some(last) = trace.last() {
                println!("epochs={} train_loss={:.6e} val_loss={:.6e}", last.epoch, last.train_loss, last.val_loss);
            }
        }
        Command::Evaluate { input, model, stops } => {
            let model = read_model(model, &mut dir.manifest, "evaluate")?;
            adopt_model(&mut cfg, &model);
            let acquired = load_inputs(input, stops.as_deref(), &mut dir.manifest).stage("evaluate")?;
            let mut records = acquired.records;
            bustrace::ingest::sort_records(&mut records);
            let prepared = prepare(&records, acquired.stops.as_deref(), &cfg).stage("evaluate")?;
            let (report, stop_eval) = evaluate_model(&prepared.split.test, &model, acquired.stops.as_deref(), &cfg).stage("evaluate")?;
            dir.manifest.wall_clock("mean_latency_s", format!("{:.6e}", report.mean_latency_s));
            let mut text = report.to_string();
            let mut pairs = Vec::new();
            report.write_pred_vs_real(&mut pairs).stage("evaluate")?;
            dir.write("pred_vs_real.csv", &pairs).stage("evaluate")?;
            if let Some(s) = &stop_eval {
                text.push_str(&s.to_string());
                let mut rows = Vec::new();
                s.write_stop_errors(&mut rows).stage("evaluate")?;
                dir.write("stop_errors.csv", &rows).stage("evaluate")?;
            }
            dir.write("evaluation.txt", text.as_bytes()).stage("evaluate")?;
            print!("{text}");
        }
        Command::Predict { input, model, rollout } => {
            let model = read_model(model, &mut dir.manifest, "predict")?;
            adopt_model(&mut cfg, &model);
            let records = read_trace(input, &mut dir.manifest, "predict")?;
            dir.write("predictions.csv", &prediction_csv(&records, &model, *rollout).stage("predict")?).stage("predict")?;
            let points = stop_points(&window(&records, &cfg.window), &model, cfg.graph.segment.dwell_speed_kmh, cfg.stop_location).stage("predict")?;
            dir.write("stop_points.csv", &stop_points_csv(&points)).stage("predict")?;
            println!("stop_points={}", points.len());
        }
        Command::ExportGtfs { input, stop_points } => {
            let records = read_trace(input, &mut dir.manifest, "export-gtfs")?;
            let bytes = read_input(stop_points).stage("export-gtfs")?;
            dir.manifest.input(&stop_points.display().to_string(), &bytes);
            let points = read_stop_points(&bytes).stage("export-gtfs")?;
            let graph = build_graph(&points, &records, &cfg.graph).stage("export-gtfs")?;
            let feed = build_feed(&graph, &cfg.agency).stage("export-gtfs")?;
            dir.write("gtfs.zip", &package(&feed).stage("export-gtfs")?).stage("export-gtfs")?;
            println!("stops={} trips={} routes={}", graph.stops.len(), graph.trips.len(), graph.routes.len());
        }
        Command::ValidateGtfs { feed } => {
            if feed.is_file() {
                let bytes = read_input(feed).stage("validate-gtfs")?;
                dir.manifest.input(&feed.display().to_string(), &bytes);
            }
            let parsed = parse_feed(feed).stage("validate-gtfs")?;
            let report = validate(&parsed);
            dir.write("validation.txt", report.to_string().as_bytes()).stage("validate-gtfs")?;
            print!("{report}");
            if !report.is_valid() {
                result =
                    Err(Error::Gtfs { file: feed.display().to_string(), reason: format!("{} validation errors", report.error_count()) }).stage("validate-gtfs");
            }
        }
        Command::Pipeline => unreachable!("handled above"),
    }
    dir.finish().stage("manifest")?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
