use ndarray::Array2;

use super::model::Model;
use crate::domain::FeatureTuple;
use crate::error::{Error, Result};
use crate::neuralnet::{argmax_class, forward, forward_batch, softmax, HeadMode, Prediction};

/// Past horizon plus the number of future steps wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRequest {
    pub recent_window: Vec<FeatureTuple>,
    pub steps_ahead: usize,
}

impl PredictionRequest {
    pub fn next(recent_window: Vec<FeatureTuple>) -> Self {
        Self { recent_window, steps_ahead: 1 }
    }
}

/// How a multi-step trace is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RolloutMode {
    /// Each prediction is fed back as the newest input.
    #[default]
    Autoregressive,
    /// Every step sees the observed tuples; only one-step predictions are made.
    TeacherForced,
}

impl std::str::FromStr for RolloutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autoregressive" => Ok(Self::Autoregressive),
            "teacher-forced" | "teacher_forced" => Ok(Self::TeacherForced),
            _ => Err(Error::invalid("rollout mode", format!("{s:?} (expected autoregressive or teacher-forced)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPrediction {
    pub location: FeatureTuple,
    /// Softmax probability of the stop class.
    pub probability: f64,
    pub is_stop: bool,
}

fn normalized(window: &[FeatureTuple], model: &Model) -> Result<Array2<f64>> {
    if window.len() != model.window_len() {
        return Err(Error::Dimension(format!("window holds {} tuples, the model expects {}", window.len(), model.window_len())));
    }
    Ok(Array2::from_shape_fn((window.len(), 3), |(t, j)| model.scaler.forward(window[t]).to_array()[j]))
}

fn denormalize(p: &Prediction, model: &Model) -> FeatureTuple {
    model.scaler.inverse(FeatureTuple::from_array(p.coords()))
}

/// One step ahead, in degrees and km/h.
pub fn predict_next(window: &[FeatureTuple], model: &Model) -> Result<FeatureTuple> {
    let x = normalized(window, model)?;
    Ok(denormalize(&forward(x.view(), &model.params)?, model))
}

/// `steps_ahead` tuples continuing `request.recent_window`.
pub fn rollout(request: &PredictionRequest, model: &Model) -> Result<Vec<FeatureTuple>> {
    if request.steps_ahead == 0 {
        return Err(Error::invalid("prediction request", "steps_ahead must be >= 1"));
    }
    let mut window = request.recent_window.clone();
    let mut out = Vec::with_capacity(request.steps_ahead);
    for _ in 0..request.steps_ahead {
        let next = predict_next(&window, model)?;
        out.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(out)
}

/// Predict every tuple of `trace` from index `k - 1` on.
///
/// Autoregressive mode seeds from the first `k - 1` observations only;
/// teacher-forced mode always reads the observed predecessors.
pub fn trace_predictions(trace: &[FeatureTuple], model: &Model, mode: RolloutMode) -> Result<Vec<FeatureTuple>> {
    let w = model.window_len();
    if trace.len() <= w {
        return Ok(Vec::new());
    }
    match mode {
        RolloutMode::Autoregressive => rollout(&PredictionRequest { recent_window: trace[..w].to_vec(), steps_ahead: trace.len() - w }, model),
        RolloutMode::TeacherForced => {
            let windows: Vec<&[FeatureTuple]> = (w..trace.len()).map(|i| &trace[i - w..i]).collect();
            Ok(batch_outputs(&windows, model)?.iter().map(|o| model.scaler.inverse(FeatureTuple::from_array([o[0], o[1], o[2]]))).collect())
        }
    }
}

fn batch_outputs(windows: &[&[FeatureTuple]], model: &Model) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(512) {
        let inputs = chunk.iter().map(|w| normalized(w, model)).collect::<Result<Vec<_>>>()?;
        let views: Vec<_> = inputs.iter().map(|a| a.view()).collect();
        out.extend(forward_batch(&views, &model.params)?.rows().into_iter().map(|r| r.to_vec()));
    }
    Ok(out)
}

/// Location and stop probability per window. A stop is declared when the
/// stop class wins the argmax, so an exact tie counts as not-stop.
pub fn predict_stops(windows: &[&[FeatureTuple]], model: &Model) -> Result<Vec<StopPrediction>> {
    if model.mode() != HeadMode::Stop {
        return Err(Error::ModeMismatch("stop prediction needs a model trained in stop mode"));
    }
    Ok(batch_outputs(windows, model)?
        .into_iter()
        .map(|o| {
            let p = softmax(&o[HeadMode::REGRESSION_OUTPUTS..]);
            StopPrediction { location: model.scaler.inverse(FeatureTuple::from_array([o[0], o[1], o[2]])), probability: p[1], is_stop: argmax_class(&p) == 1 }
        })
        .collect())
}
