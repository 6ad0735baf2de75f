use std::fmt;
use std::io::Write;
use std::time::Instant;

use super::infer::{predict_next, StopPrediction};
use super::model::Model;
use crate::domain::{Block, BusStop, FeatureTuple};
use crate::error::{Error, Result};
use crate::geo::distance_m;

/// `sqrt(sum(e^2) / n)`.
pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::invalid("rmse", "no errors to aggregate"));
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub rmse_lat: f64,
    pub rmse_lon: f64,
    pub rmse_speed: f64,
    /// `(real, predicted)` per test block, in block order.
    pub pairs: Vec<(FeatureTuple, FeatureTuple)>,
    /// Signed `predicted - real`, degrees.
    pub errors_lat: Vec<f64>,
    pub errors_lon: Vec<f64>,
    /// Mean wall-clock seconds per single prediction.
    pub mean_latency_s: f64,
}

impl EvaluationReport {
    pub fn count(&self) -> usize {
        self.pairs.len()
    }

    /// `real_lat,real_lon,pred_lat,pred_lon`.
    pub fn write_pred_vs_real<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["real_lat", "real_lon", "pred_lat", "pred_lon"])?;
        for (real, pred) in &self.pairs {
            w.write_record([real.lat, real.lon, pred.lat, pred.lon].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Deterministic part of the report; latency is left out on purpose so the
/// text is reproducible.
impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "test_blocks={}", self.count())?;
        writeln!(f, "rmse_lat_deg={:.6e}", self.rmse_lat)?;
        writeln!(f, "rmse_lon_deg={:.6e}", self.rmse_lon)?;
        writeln!(f, "rmse_speed_kmh={:.6}", self.rmse_speed)
    }
}

/// One-step predictions over `blocks`, with per-prediction timing.
pub fn evaluate(blocks: &[Block], model: &Model) -> Result<EvaluationReport> {
    if blocks.is_empty() {
        return Err(Error::invalid("evaluation", "empty test split"));
    }
    let mut pairs = Vec::with_capacity(blocks.len());
    let mut elapsed = 0.0;
    for b in blocks {
        let t0 = Instant::now();
        let pred = predict_next(&b.features, model)?;
        elapsed += t0.elapsed().as_secs_f64();
        pairs.push((b.label, pred));
    }
    let errors_lat: Vec<f64> = pairs.iter().map(|(r, p)| p.lat - r.lat).collect();
    let errors_lon: Vec<f64> = pairs.iter().map(|(r, p)| p.lon - r.lon).collect();
    let errors_speed: Vec<f64> = pairs.iter().map(|(r, p)| p.sp - r.sp).collect();
    Ok(EvaluationReport {
        rmse_lat: rmse(&errors_lat)?,
        rmse_lon: rmse(&errors_lon)?,
        rmse_speed: rmse(&errors_speed)?,
        pairs,
        errors_lat,
        errors_lon,
        mean_latency_s: (elapsed / blocks.len() as f64).max(f64::MIN_POSITIVE),
    })
}

/// Declared stop predictions scored against known stops.
#[derive(Debug, Clone, PartialEq)]
pub struct StopEvaluation {
    pub declared: usize,
    /// Nearest known stop per declared prediction, with signed errors.
    pub matches: Vec<StopMatch>,
    pub rmse_lat: f64,
    pub rmse_lon: f64,
    /// Known stops with at least one declared prediction within the match radius.
    pub covered_stops: usize,
    pub total_stops: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopMatch {
    pub predicted: FeatureTuple,
    pub probability: f64,
    pub stop_id: String,
    pub error_lat: f64,
    pub error_lon: f64,
    pub distance_m: f64,
}

impl StopEvaluation {
    pub fn coverage(&self) -> f64 {
        if self.total_stops == 0 {
            0.0
        } else {
            self.covered_stops as f64 / self.total_stops as f64
        }
    }

    /// `pred_lat,pred_lon,probability,stop_id,error_lat,error_lon,distance_m`.
    pub fn write_stop_errors<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["pred_lat", "pred_lon", "probability", "stop_id", "error_lat", "error_lon", "distance_m"])?;
        for m in &self.matches {
            w.write_record([
                m.predicted.lat.to_string(),
                m.predicted.lon.to_string(),
                m.probability.to_string(),
                m.stop_id.clone(),
                m.error_lat.to_string(),
                m.error_lon.to_string(),
                m.distance_m.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for StopEvaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "declared_stops={}", self.declared)?;
        writeln!(f, "stop_rmse_lat_deg={:.6e}", self.rmse_lat)?;
        writeln!(f, "stop_rmse_lon_deg={:.6e}", self.rmse_lon)?;
        writeln!(f, "stops_covered={}/{}", self.covered_stops, self.total_stops)
    }
}

pub fn evaluate_stops(predictions: &[StopPrediction], stops: &[BusStop], match_radius_m: f64) -> StopEvaluation {
    let mut covered = vec![false; stops.len()];
    let mut matches = Vec::new();
    for p in predictions.iter().filter(|p| p.is_stop) {
        let nearest =
            stops.iter().enumerate().map(|(i, s)| (i, distance_m(p.location.lat, p.location.lon, s.latitude, s.longitude))).min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((i, d)) = nearest {
            if d <= match_radius_m {
                covered[i] = true;
            }
            let s = &stops[i];
            matches.push(StopMatch {
                predicted: p.location,
                probability: p.probability,
                stop_id: s.stop_id.clone(),
                error_lat: p.location.lat - s.latitude,
                error_lon: p.location.lon - s.longitude,
                distance_m: d,
            });
        }
    }
    let lat: Vec<f64> = matches.iter().map(|m| m.error_lat).collect();
    let lon: Vec<f64> = matches.iter().map(|m| m.error_lon).collect();
    StopEvaluation {
        declared: predictions.iter().filter(|p| p.is_stop).count(),
        rmse_lat: rmse(&lat).unwrap_or(f64::NAN),
        rmse_lon: rmse(&lon).unwrap_or(f64::NAN),
        matches,
        covered_stops: covered.iter().filter(|&&c| c).count(),
        total_stops: stops.len(),
    }
}
