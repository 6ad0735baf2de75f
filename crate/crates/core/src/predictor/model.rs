use crate::domain::ScalerParams;
use crate::error::Result;
use crate::neuralnet::{load_model, save_model, HeadMode, LstmParams, SavedModel, TrainConfig};

/// Trained weights plus everything needed to apply them to raw tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: LstmParams,
    pub scaler: ScalerParams,
    pub config: TrainConfig,
}

impl Model {
    pub fn new(params: LstmParams, scaler: ScalerParams, config: TrainConfig) -> Self {
        Self { params, scaler, config }
    }

    pub fn mode(&self) -> HeadMode {
        HeadMode::from_output_size(self.params.output_size()).unwrap_or(self.config.mode)
    }

    /// Number of past tuples a request must carry (`k - 1`).
    pub fn window_len(&self) -> usize {
        self.config.k - 1
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        save_model(&self.params, &self.scaler, &self.config)
    }

    pub fn from_bytes(blob: &[u8]) -> Result<Self> {
        Ok(load_model(blob)?.into())
    }
}

impl From<SavedModel> for Model {
    fn from(s: SavedModel) -> Self {
        Self { params: s.params, scaler: s.scaler, config: s.config }
    }
}
