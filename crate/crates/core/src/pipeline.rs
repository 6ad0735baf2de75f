//! Stage composition shared by the command-line tool and the test suites.
//!
//! Every stage is a plain function over in-memory values; [`run_pipeline`]
//! chains them and writes each stage's artifacts into one output directory.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::config::KeyValues;
use crate::domain::{Block, BusStop, FeatureTuple, GpsRecord, TransitGraph};
use crate::error::{Error, Result};
use crate::gtfs::{build_feed, package, validate, Agency, ValidationReport};
use crate::ingest::{
    clean, fit_scaler_blocks, inject_stop_labels, parse_csv, split, window, window_labeled, write_csv, CleanConfig, CleaningReport, Split, SplitRatios,
    WindowConfig,
};
use crate::neuralnet::{samples_from_blocks, train, HeadMode, TrainConfig, TrainingTrace};
use crate::predictor::{evaluate, evaluate_stops, predict_stops, trace_predictions, EvaluationReport, Model, RolloutMode, StopEvaluation, StopPrediction};
use crate::simulator::{read_stops_csv, simulate, write_stops_csv, write_trips_csv, GroundTruth, SimConfig};
use crate::transitgraph::{build_graph, GraphConfig, SegmentConfig};

/// A failure tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Every setting the stages read, resolved from a configuration file plus
/// command-line overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Name of the configuration the settings came from.
    pub origin: String,
    pub seed: u64,
    /// Fleet to simulate when no recorded trace is given.
    pub sim: Option<SimConfig>,
    /// Recorded tracker CSV.
    pub input_gps: Option<PathBuf>,
    /// Known stop list (`stop_id,name,latitude,longitude`) used for stop labels.
    pub input_stops: Option<PathBuf>,
    pub clean: CleanConfig,
    pub window: WindowConfig,
    pub split: SplitRatios,
    pub train: TrainConfig,
    /// Records within this distance of a known stop are labelled as stops.
    pub stop_label_radius_m: f64,
    /// A declared stop within this distance of a known stop covers it.
    pub stop_match_radius_m: f64,
    /// Where the points fed to stop clustering come from.
    pub stop_location: StopLocation,
    pub graph: GraphConfig,
    pub agency: Agency,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            origin: "defaults".into(),
            seed: 0,
            sim: None,
            input_gps: None,
            input_stops: None,
            clean: CleanConfig::default(),
            window: WindowConfig::default(),
            split: SplitRatios::default(),
            train: TrainConfig::default(),
            stop_label_radius_m: 25.0,
            stop_match_radius_m: 30.0,
            stop_location: StopLocation::Predicted,
            graph: GraphConfig::default(),
            agency: Agency::default(),
        }
    }
}

/// Position attached to a window the model flags as a stop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopLocation {
    /// The model's predicted next position.
    Predicted,
    /// The recorded position the window's label refers to.
    Observed,
}

impl StopLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            StopLocation::Predicted => "predicted",
            StopLocation::Observed => "observed",
        }
    }
}

impl std::str::FromStr for StopLocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(StopLocation::Predicted),
            "observed" => Ok(StopLocation::Observed),
            other => Err(Error::invalid("stop location", format!("`{other}` is neither `predicted` nor `observed`"))),
        }
    }
}

/// Command-line settings that take precedence over the configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<HeadMode>,
    pub k: Option<usize>,
    pub stride: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub hidden_size: Option<usize>,
}

impl PipelineConfig {
    pub fn from_config(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        let seg = SegmentConfig::default();
        let mode = match kv.get_str("train.mode") {
            Some(text) => text.parse()?,
            None => d.train.mode,
        };
        let seed = kv.get_or("seed", d.seed)?;
        let window = WindowConfig::new(
            kv.get_or("window.k", d.window.k)?,
            kv.get_or("window.stride", d.window.stride)?,
            kv.get_or("window.max_gap_s", d.window.max_gap)?,
        )?;
        let mut cfg = Self {
            origin: kv.origin().to_string(),
            seed,
            sim: if kv.groups("route").is_empty() { None } else { Some(SimConfig::from_config(kv)?) },
            input_gps: kv.get_str("input.gps").map(|p| kv.resolve(p)),
            input_stops: kv.get_str("input.stops").map(|p| kv.resolve(p)),
            clean: CleanConfig { jitter_epsilon_m: kv.get_or("clean.jitter_m", d.clean.jitter_epsilon_m)? },
            window,
            split: SplitRatios::new(
                kv.get_or("split.train", d.split.train)?,
                kv.get_or("split.validation", d.split.validation)?,
                kv.get_or("split.test", d.split.test)?,
            )?,
            train: TrainConfig {
                batch_size: kv.get_or("train.batch", d.train.batch_size)?,
                hidden_size: kv.get_or("train.hidden", d.train.hidden_size)?,
                learning_rate: kv.get_or("train.lr", d.train.learning_rate)?,
                epochs: kv.get_or("train.epochs", d.train.epochs)?,
                init_scale: kv.get_or("train.init_scale", d.train.init_scale)?,
                mode,
                ..d.train
            },
            stop_label_radius_m: kv.get_or("stops.label_radius_m", d.stop_label_radius_m)?,
            stop_match_radius_m: kv.get_or("stops.match_radius_m", d.stop_match_radius_m)?,
            stop_location: kv.get_or("stops.location", d.stop_location)?,
            graph: GraphConfig {
                cluster_radius_m: kv.get_or("graph.cluster_radius_m", d.graph.cluster_radius_m)?,
                min_cluster_size: kv.get_or("graph.min_cluster_size", d.graph.min_cluster_size)?,
                segment: SegmentConfig {
                    stop_radius_m: kv.get_or("graph.stop_radius_m", seg.stop_radius_m)?,
                    dwell_threshold_s: kv.get_or("graph.dwell_threshold_s", seg.dwell_threshold_s)?,
                    dwell_speed_kmh: kv.get_or("graph.dwell_speed_kmh", seg.dwell_speed_kmh)?,
                    max_gap_s: kv.get_or("graph.max_gap_s", seg.max_gap_s)?,
                },
            },
            agency: Agency {
                agency_id: kv.get_str("gtfs.agency_id").map_or(d.agency.agency_id, str::to_string),
                agency_name: kv.get_str("gtfs.agency_name").map_or(d.agency.agency_name, str::to_string),
                agency_url: kv.get_str("gtfs.agency_url").map_or(d.agency.agency_url, str::to_string),
                agency_timezone: kv.get_str("gtfs.timezone").map_or(d.agency.agency_timezone, str::to_string),
            },
        };
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    /// The bundled desk scenario.
    pub fn desk() -> Result<Self> {
        Self::from_config(&crate::simulator::desk_config()?)
    }

    /// Propagate the seed and block length to every stage that uses them.
    fn sync(&mut self) {
        self.train.seed = self.seed;
        self.train.k = self.window.k;
        if let Some(sim) = self.sim.as_mut() {
            sim.seed = self.seed;
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.mode {
            self.train.mode = v;
        }
        if let Some(v) = o.k {
            self.window.k = v;
        }
        if let Some(v) = o.stride {
            self.window.stride = v;
        }
        if let Some(v) = o.epochs {
            self.train.epochs = v;
        }
        if let Some(v) = o.learning_rate {
            self.train.learning_rate = v;
        }
        if let Some(v) = o.batch_size {
            self.train.batch_size = v;
        }
        if let Some(v) = o.hidden_size {
            self.train.hidden_size = v;
        }
        self.sync();
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.split.validate()?;
        self.train.validate()?;
        self.graph.segment.validate()?;
        if let Some(sim) = &self.sim {
            sim.validate()?;
        }
        if !(self.stop_label_radius_m > 0.0 && self.stop_match_radius_m > 0.0 && self.graph.cluster_radius_m > 0.0) {
            return Err(Error::invalid("pipeline config", "stop radii must be positive"));
        }
        Ok(())
    }

    /// Effective settings as `key=value` pairs, in a fixed order.
    pub fn settings(&self) -> Vec<(String, String)> {
        let mut out: Vec<(&str, String)> =
            vec![("seed", self.seed.to_string()), ("source", if self.input_gps.is_some() { "recorded".into() } else { "simulated".into() })];
        if let Some(sim) = &self.sim {
            out.extend([
                ("sim.start", crate::domain::format_timestamp(&sim.start)),
                ("sim.duration_h", sim.duration_h.to_string()),
                ("sim.report_interval_s", sim.report_interval_s.to_string()),
                ("sim.gps_noise_m", sim.gps_noise_sigma_m.to_string()),
                ("sim.zero_speed_rate", sim.zero_speed_rate.to_string()),
                ("sim.duplicate_rate", sim.duplicate_rate.to_string()),
                ("sim.routes", sim.routes.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("|")),
                ("sim.buses", sim.buses_per_route.iter().map(usize::to_string).collect::<Vec<_>>().join("|")),
            ]);
        }
        out.extend([
            ("clean.jitter_m", self.clean.jitter_epsilon_m.to_string()),
            ("window.k", self.window.k.to_string()),
            ("window.stride", self.window.stride.to_string()),
            ("window.max_gap_s", self.window.max_gap.to_string()),
            ("split", format!("{}/{}/{}", self.split.train, self.split.validation, self.split.test)),
            ("train.mode", self.train.mode.as_str().into()),
            ("train.hidden", self.train.hidden_size.to_string()),
            ("train.batch", self.train.batch_size.to_string()),
            ("train.epochs", self.train.epochs.to_string()),
            ("train.lr", self.train.learning_rate.to_string()),
            ("train.init_scale", self.train.init_scale.to_string()),
            ("stops.label_radius_m", self.stop_label_radius_m.to_string()),
            ("stops.match_radius_m", self.stop_match_radius_m.to_string()),
            ("stops.location", self.stop_location.as_str().into()),
            ("graph.cluster_radius_m", self.graph.cluster_radius_m.to_string()),
            ("graph.min_cluster_size", self.graph.min_cluster_size.to_string()),
            ("graph.stop_radius_m", self.graph.segment.stop_radius_m.to_string()),
            ("graph.dwell_threshold_s", self.graph.segment.dwell_threshold_s.to_string()),
            ("graph.dwell_speed_kmh", self.graph.segment.dwell_speed_kmh.to_string()),
            ("graph.max_gap_s", self.graph.segment.max_gap_s.to_string()),
            ("gtfs.agency_id", self.agency.agency_id.clone()),
            ("gtfs.timezone", self.agency.agency_timezone.clone()),
        ]);
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

/// Run record written next to a stage's artifacts. Everything except the
/// `wall_clock.*` lines is a deterministic function of the inputs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    fields: Vec<(String, String)>,
    wall_clock: Vec<(String, String)>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, cfg: &PipelineConfig) -> Self {
        let mut m = Self::default();
        m.set("tool", concat!("bustrace ", env!("CARGO_PKG_VERSION")));
        m.set("command", command);
        m.set("config", &cfg.origin);
        for (k, v) in cfg.settings() {
            m.set(&format!("setting.{k}"), &v);
        }
        m
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.fields.push((key.into(), value.into()));
    }

    pub fn input(&mut self, name: &str, bytes: &[u8]) {
        self.set(&format!("input.{name}.sha256"), &sha256_hex(bytes));
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.set(&format!("output.{name}.sha256"), &sha256_hex(bytes));
    }

    pub fn wall_clock(&mut self, key: &str, value: impl fmt::Display) {
        self.wall_clock.push((format!("wall_clock.{key}"), value.to_string()));
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.fields.iter().chain(&self.wall_clock) {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Writes artifacts into one directory and records their digests.
pub struct OutputDir {
    dir: PathBuf,
    pub manifest: Manifest,
}

impl OutputDir {
    pub fn create(dir: &Path, manifest: Manifest) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), manifest })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
        self.manifest.output(name, bytes);
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let path = self.path("manifest.txt");
        fs::write(&path, self.manifest.to_string()).map_err(|e| Error::io(path, e))
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Raw records plus the stop list available for labelling.
#[derive(Debug, Clone, Default)]
pub struct Acquired {
    pub records: Vec<GpsRecord>,
    pub report: CleaningReport,
    pub stops: Option<Vec<BusStop>>,
    pub truth: Option<GroundTruth>,
}

/// Parse recorded input files, noting their digests in `manifest`.
pub fn load_inputs(gps: &Path, stops: Option<&Path>, manifest: &mut Manifest) -> Result<Acquired> {
    let bytes = read_input(gps)?;
    manifest.input(&gps.display().to_string(), &bytes);
    let parsed = parse_csv(bytes.as_slice())?;
    let stops = match stops {
        Some(p) => {
            let bytes = read_input(p)?;
            manifest.input(&p.display().to_string(), &bytes);
            Some(read_stops_csv(bytes.as_slice())?)
        }
        None => None,
    };
    Ok(Acquired { records: parsed.records, report: parsed.report, stops, truth: None })
}

pub fn csv_bytes(records: &[GpsRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_csv(records, None, &mut out)?;
    Ok(out)
}

pub fn stops_bytes(stops: &[BusStop]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_stops_csv(stops, &mut out)?;
    Ok(out)
}

pub fn trips_bytes(truth: &GroundTruth) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_trips_csv(&truth.trips, &truth.routes, &mut out)?;
    Ok(out)
}

/// Blocks split into train/validation/test and the scaler fitted on training blocks.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Split<Block>,
    pub scaler: crate::domain::ScalerParams,
}

/// Window the cleaned trace (with stop labels in stop mode) and split it.
pub fn prepare(cleaned: &[GpsRecord], stops: Option<&[BusStop]>, cfg: &PipelineConfig) -> Result<Prepared> {
    let blocks = match cfg.train.mode {
        HeadMode::Regression => window(cleaned, &cfg.window),
        HeadMode::Stop => {
            let stops = stops.ok_or_else(|| Error::invalid("pipeline", "stop mode needs a stop list for labelling"))?;
            let flags = inject_stop_labels(cleaned, stops, cfg.stop_label_radius_m);
            window_labeled(cleaned, &flags, &cfg.window)?
        }
    };
    let split = split(blocks, &cfg.split, cfg.seed)?;
    let scaler = fit_scaler_blocks(&split.train)?;
    Ok(Prepared { split, scaler })
}

pub fn train_model(prepared: &Prepared, cfg: &PipelineConfig) -> Result<(Model, TrainingTrace)> {
    let mode = cfg.train.mode;
    let train_set = samples_from_blocks(&prepared.split.train, &prepared.scaler, mode)?;
    let val_set = samples_from_blocks(&prepared.split.validation, &prepared.scaler, mode)?;
    let (params, trace) = train(&train_set, &val_set, &cfg.train)?;
    Ok((Model::new(params, prepared.scaler, cfg.train), trace))
}

/// Regression metrics on `test`, plus stop metrics when the model predicts stops
/// and a stop list is known.
pub fn evaluate_model(test: &[Block], model: &Model, stops: Option<&[BusStop]>, cfg: &PipelineConfig) -> Result<(EvaluationReport, Option<StopEvaluation>)> {
    let report = evaluate(test, model)?;
    let stop_eval = match (model.mode(), stops) {
        (HeadMode::Stop, Some(stops)) => Some(evaluate_stops(&block_stop_predictions(test, model)?, stops, cfg.stop_match_radius_m)),
        _ => None,
    };
    Ok((report, stop_eval))
}

pub fn block_stop_predictions(blocks: &[Block], model: &Model) -> Result<Vec<StopPrediction>> {
    let windows: Vec<&[FeatureTuple]> = blocks.iter().map(|b| b.features.as_slice()).collect();
    predict_stops(&windows, model)
}

/// Points where the model sees a stop: declared stops for a stop model,
/// near-stationary predictions for a regression model.
pub fn stop_points(blocks: &[Block], model: &Model, dwell_speed_kmh: f64, location: StopLocation) -> Result<Vec<(f64, f64)>> {
    let flagged: Vec<(usize, FeatureTuple)> = match model.mode() {
        HeadMode::Stop => block_stop_predictions(blocks, model)?.into_iter().enumerate().filter(|(_, p)| p.is_stop).map(|(i, p)| (i, p.location)).collect(),
        HeadMode::Regression => {
            let mut out = Vec::new();
            for (i, b) in blocks.iter().enumerate() {
                let p = crate::predictor::predict_next(&b.features, model)?;
                if p.sp < dwell_speed_kmh {
                    out.push((i, p));
                }
            }
            out
        }
    };
    Ok(flagged
        .into_iter()
        .map(|(i, p)| match location {
            StopLocation::Predicted => (p.lat, p.lon),
            StopLocation::Observed => (blocks[i].label.lat, blocks[i].label.lon),
        })
        .collect())
}

pub fn stop_points_csv(points: &[(f64, f64)]) -> Vec<u8> {
    let mut out = b"latitude,longitude\n".to_vec();
    for (lat, lon) in points {
        writeln!(out, "{lat},{lon}").expect("write to vec");
    }
    out
}

pub fn read_stop_points(bytes: &[u8]) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    reader.deserialize::<(f64, f64)>().map(|r| r.map_err(Error::from)).collect()
}

/// One-step or rolled-out predictions for every unit of a cleaned trace,
/// as `unit_id,time,pred_lat,pred_lon,pred_speed` rows.
pub fn prediction_csv(cleaned: &[GpsRecord], model: &Model, mode: RolloutMode) -> Result<Vec<u8>> {
    let mut out = b"unit_id,time,pred_lat,pred_lon,pred_speed\n".to_vec();
    let mut start = 0;
    while start < cleaned.len() {
        let unit = &cleaned[start].unit_id;
        let end = start + cleaned[start..].iter().take_while(|r| &r.unit_id == unit).count();
        let run = &cleaned[start..end];
        let tuples: Vec<_> = run.iter().map(GpsRecord::tuple).collect();
        let preds = trace_predictions(&tuples, model, mode)?;
        for (rec, p) in run[model.window_len()..].iter().zip(preds) {
            writeln!(out, "{},{},{},{},{}", rec.unit_id, crate::domain::format_timestamp(&rec.timestamp), p.lat, p.lon, p.sp).expect("write to vec");
        }
        start = end;
    }
    Ok(out)
}

/// Everything a full run produced, for callers that inspect results in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub truth: Option<GroundTruth>,
    pub cleaning: CleaningReport,
    pub prepared: Prepared,
    pub model: Model,
    pub trace: TrainingTrace,
    pub evaluation: EvaluationReport,
    pub stop_evaluation: Option<StopEvaluation>,
    pub graph: TransitGraph,
    pub validation: ValidationReport,
    pub gtfs_zip: Vec<u8>,
}

fn evaluation_text(report: &EvaluationReport, stops: Option<&StopEvaluation>) -> String {
    let mut text = report.to_string();
    if let Some(s) = stops {
        text.push_str(&s.to_string());
    }
    text
}

/// Run every stage and write its artifacts into `out`.
///
/// Simulated input is used unless the configuration names a recorded trace.
/// A feed that fails validation is still written, then reported as a
/// `validate-gtfs` failure.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> std::result::Result<PipelineOutcome, StageError> {
    run_pipeline_with(cfg, out, Manifest::new("pipeline", cfg))
}

/// [`run_pipeline`] starting from a manifest that already lists some inputs.
pub fn run_pipeline_with(cfg: &PipelineConfig, out: &Path, manifest: Manifest) -> std::result::Result<PipelineOutcome, StageError> {
    let started = Instant::now();
    let mut dir = OutputDir::create(out, manifest).stage("setup")?;

    let acquired = match (&cfg.input_gps, &cfg.sim) {
        (Some(gps), _) => load_inputs(gps, cfg.input_stops.as_deref(), &mut dir.manifest).stage("ingest")?,
        (None, Some(sim)) => {
            let (records, truth) = simulate(sim).stage("simulate")?;
            dir.write("gps.csv", &csv_bytes(&records).stage("simulate")?).stage("simulate")?;
            dir.write("truth_stops.csv", &stops_bytes(&truth.stops).stage("simulate")?).stage("simulate")?;
            dir.write("truth_trips.csv", &trips_bytes(&truth).stage("simulate")?).stage("simulate")?;
            let report = CleaningReport { rows_read: records.len(), rows_kept: records.len(), ..Default::default() };
            Acquired { records, report, stops: Some(truth.stops.clone()), truth: Some(truth) }
        }
        (None, None) => return Err(Error::invalid("pipeline config", "neither `input.gps` nor simulated routes are configured")).stage("ingest"),
    };

    let (cleaned, clean_report) = clean(&acquired.records, &cfg.clean);
    let cleaning = acquired.report.then(clean_report);
    dir.write("cleaning_report.txt", cleaning.to_string().as_bytes()).stage("clean")?;

    let prepared = prepare(&cleaned, acquired.stops.as_deref(), cfg).stage("window")?;
    let train_started = Instant::now();
    let (model, trace) = train_model(&prepared, cfg).stage("train")?;
    dir.manifest.wall_clock("train_s", format!("{:.3}", train_started.elapsed().as_secs_f64()));
    dir.write("model.bin", &model.to_bytes()).stage("train")?;
    dir.write("loss_trace.csv", trace.to_csv().as_bytes()).stage("train")?;

    let (evaluation, stop_evaluation) = evaluate_model(&prepared.split.test, &model, acquired.stops.as_deref(), cfg).stage("evaluate")?;
    dir.manifest.wall_clock("mean_latency_s", format!("{:.6e}", evaluation.mean_latency_s));
    dir.write("evaluation.txt", evaluation_text(&evaluation, stop_evaluation.as_ref()).as_bytes()).stage("evaluate")?;
    let mut pairs = Vec::new();
    evaluation.write_pred_vs_real(&mut pairs).stage("evaluate")?;
    dir.write("pred_vs_real.csv", &pairs).stage("evaluate")?;
    if let Some(s) = &stop_evaluation {
        let mut rows = Vec::new();
        s.write_stop_errors(&mut rows).stage("evaluate")?;
        dir.write("stop_errors.csv", &rows).stage("evaluate")?;
    }

    let all_blocks = window(&cleaned, &cfg.window);
    let points = stop_points(&all_blocks, &model, cfg.graph.segment.dwell_speed_kmh, cfg.stop_location).stage("predict")?;
    dir.write("stop_points.csv", &stop_points_csv(&points)).stage("predict")?;

    let graph = build_graph(&points, &cleaned, &cfg.graph).stage("graph")?;
    let feed = build_feed(&graph, &cfg.agency).stage("export-gtfs")?;
    let gtfs_zip = package(&feed).stage("export-gtfs")?;
    dir.write("gtfs.zip", &gtfs_zip).stage("export-gtfs")?;
    let validation = validate(&feed);
    dir.write("validation.txt", validation.to_string().as_bytes()).stage("validate-gtfs")?;

    dir.manifest.wall_clock("total_s", format!("{:.3}", started.elapsed().as_secs_f64()));
    dir.finish().stage("manifest")?;
    if !validation.is_valid() {
        return Err(Error::Gtfs { file: "gtfs.zip".into(), reason: format!("{} validation errors", validation.error_count()) }).stage("validate-gtfs");
    }
    Ok(PipelineOutcome { truth: acquired.truth, cleaning, prepared, model, trace, evaluation, stop_evaluation, graph, validation, gtfs_zip })
}
