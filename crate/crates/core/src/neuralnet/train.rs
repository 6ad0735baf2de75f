use std::fmt::Write as _;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{Adam, AdamConfig};
use super::loss::{loss, Target};
use super::network::{backward, forward_batch, Sample};
use super::params::{HeadMode, LstmParams};
use crate::domain::{Block, ScalerParams};
use crate::error::{Error, Result};

/// Network and optimizer settings. Defaults follow the reference configuration:
/// batch 30, 400 hidden units, learning rate 5e-4, 200 epochs, 3 in / 3 out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub input_features: usize,
    pub output_features: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub mode: HeadMode,
    /// Half-width of the uniform weight initialization.
    pub init_scale: f64,
    /// Block length the model is trained on (`k - 1` inputs plus the label).
    pub k: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 30,
            hidden_size: 400,
            learning_rate: 5e-4,
            epochs: 200,
            input_features: 3,
            output_features: 3,
            seed: 0,
            adam: AdamConfig::default(),
            mode: HeadMode::Regression,
            init_scale: 0.08,
            k: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.batch_size, self.hidden_size, self.input_features, self.output_features];
        if positive.contains(&0) {
            return Err(Error::invalid("train config", "batch size, hidden size and feature counts must be positive"));
        }
        if !(0.0..1.0).contains(&self.learning_rate) {
            return Err(Error::invalid("train config", format!("learning rate {} outside [0, 1)", self.learning_rate)));
        }
        if self.input_features != 3 || self.output_features != 3 {
            return Err(Error::invalid("train config", "the predictor consumes and produces <lat, lon, speed> tuples"));
        }
        if self.k < 3 {
            return Err(Error::invalid("train config", format!("block length {} must be >= 3", self.k)));
        }
        Ok(())
    }

    pub fn init_params(&self) -> LstmParams {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        LstmParams::init_uniform(self.input_features, self.hidden_size, self.mode.output_size(), self.init_scale, &mut rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochLoss>,
}

impl TrainingTrace {
    pub fn last(&self) -> Option<&EpochLoss> {
        self.epochs.last()
    }

    /// `epoch,train_loss,val_loss`, one row per completed epoch.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            writeln!(out, "{},{},{}", e.epoch, e.train_loss, e.val_loss).expect("write to string");
        }
        out
    }
}

/// Normalize blocks into training samples.
pub fn samples_from_blocks(blocks: &[Block], scaler: &ScalerParams, mode: HeadMode) -> Result<Vec<Sample>> {
    blocks
        .iter()
        .map(|b| {
            if mode == HeadMode::Stop && b.is_stop.is_none() {
                return Err(Error::invalid("block", "stop mode needs stop-labelled blocks"));
            }
            let inputs = Array2::from_shape_fn((b.features.len(), 3), |(t, j)| scaler.forward(b.features[t]).to_array()[j]);
            Ok(Sample { inputs, target: Target { coords: scaler.forward(b.label).to_array(), stop: b.is_stop } })
        })
        .collect()
}

/// Mean loss over `samples`, summed in index order.
pub fn evaluate_loss(samples: &[Sample], params: &LstmParams, mode: HeadMode) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for chunk in samples.chunks(256) {
        let views: Vec<_> = chunk.iter().map(|s| s.inputs.view()).collect();
        let out = forward_batch(&views, params)?;
        for (row, s) in out.rows().into_iter().zip(chunk) {
            total += loss(row.as_slice().expect("row-major"), &s.target, mode)?;
        }
    }
    Ok(total / samples.len() as f64)
}

/// Mini-batch Adam training.
///
/// Each epoch reshuffles the training set with a seeded generator, so the
/// whole run is a deterministic function of `(train, val, cfg)`.
pub fn train(train: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<(LstmParams, TrainingTrace)> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::invalid("training data", "training and validation splits must be non-empty"));
    }
    let mut params = cfg.init_params();
    let mut opt = Adam::new(cfg.adam, &params);
    let mut shuffler = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffler.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut losses = vec![0.0; train.len()];
    let mut trace = TrainingTrace::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffler);
        for (batch_index, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample> = idx.iter().map(|&i| &train[i]).collect();
            let (batch_losses, mut grads) = backward(&batch, &params, cfg.mode)?;
            if batch_losses.iter().any(|l| !l.is_finite()) || grads.tensors().iter().any(|t| t.iter().any(|g| !g.is_finite())) {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_index });
            }
            for (&i, l) in idx.iter().zip(batch_losses) {
                losses[i] = l;
            }
            grads.scale(1.0 / idx.len() as f64);
            opt.step(&mut params, &grads, cfg.learning_rate);
        }
        let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let val_loss = evaluate_loss(val, &params, cfg.mode)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: order.len().div_ceil(cfg.batch_size) });
        }
        trace.epochs.push(EpochLoss { epoch: epoch + 1, train_loss, val_loss });
    }
    Ok((params, trace))
}
