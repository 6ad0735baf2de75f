//! Versioned little-endian model blob.
//!
//! ```text
//! magic[8] version:u32
//! mode:u32 input:u32 hidden:u32 output:u32 k:u32 batch:u32 epochs:u32
//! seed:u64 learning_rate:f64 beta1:f64 beta2:f64 epsilon:f64 init_scale:f64
//! parameter_count:u64 parameters:f64[parameter_count]
//! scaler:f64[6]   (lat min/max, lon min/max, speed min/max)
//! ```
//!
//! Parameters are written gates, gate bias, head, head bias, all row-major.

use super::adam::AdamConfig;
use super::params::{HeadMode, LstmParams};
use super::train::TrainConfig;
use crate::domain::{FeatureRange, ScalerParams};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: [u8; 8] = *b"BTLSTM\r\n";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub params: LstmParams,
    pub scaler: ScalerParams,
    pub config: TrainConfig,
}

pub fn save_model(params: &LstmParams, scaler: &ScalerParams, cfg: &TrainConfig) -> Vec<u8> {
    let mut out = Vec::with_capacity(128 + 8 * params.parameter_count());
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let mode = match cfg.mode {
        HeadMode::Regression => 0u32,
        HeadMode::Stop => 1,
    };
    let header =
        [mode, params.input_size() as u32, params.hidden_size() as u32, params.output_size() as u32, cfg.k as u32, cfg.batch_size as u32, cfg.epochs as u32];
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    for v in [cfg.learning_rate, cfg.adam.beta1, cfg.adam.beta2, cfg.adam.epsilon, cfg.init_scale] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(params.parameter_count() as u64).to_le_bytes());
    for tensor in params.tensors() {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for r in [scaler.lat, scaler.lon, scaler.speed] {
        out.extend_from_slice(&r.min.to_le_bytes());
        out.extend_from_slice(&r.max.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(Error::ModelFormat(format!("truncated at byte {} (need {n} more)", self.pos)));
        };
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn load_model(blob: &[u8]) -> Result<SavedModel> {
    let mut cur = Cursor { buf: blob, pos: 0 };
    if cur.take(8)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("bad magic bytes".into()));
    }
    let version = cur.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version} (expected {MODEL_VERSION})")));
    }
    let mode = match cur.u32()? {
        0 => HeadMode::Regression,
        1 => HeadMode::Stop,
        m => return Err(Error::ModelFormat(format!("unknown mode tag {m}"))),
    };
    let input = cur.u32()? as usize;
    let hidden = cur.u32()? as usize;
    let output = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let batch_size = cur.u32()? as usize;
    let epochs = cur.u32()? as usize;
    let seed = cur.u64()?;
    let learning_rate = cur.f64()?;
    let adam = AdamConfig { beta1: cur.f64()?, beta2: cur.f64()?, epsilon: cur.f64()? };
    let init_scale = cur.f64()?;
    if output != mode.output_size() || input == 0 || hidden == 0 {
        return Err(Error::ModelFormat(format!("inconsistent shape header {input}/{hidden}/{output}")));
    }
    let mut params = LstmParams::zeros(input, hidden, output);
    let count = cur.u64()?;
    if count != params.parameter_count() as u64 {
        return Err(Error::ModelFormat(format!("parameter count {count} does not match the shape header")));
    }
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            *v = cur.f64()?;
        }
    }
    let mut range = |what| -> Result<FeatureRange> {
        let (min, max) = (cur.f64()?, cur.f64()?);
        FeatureRange::new(what, min, max).map_err(|e| Error::ModelFormat(e.to_string()))
    };
    let scaler = ScalerParams { lat: range("latitude")?, lon: range("longitude")?, speed: range("speed")? };
    if cur.pos != blob.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", blob.len() - cur.pos)));
    }
    let config = TrainConfig {
        batch_size,
        hidden_size: hidden,
        learning_rate,
        epochs,
        input_features: input,
        output_features: HeadMode::REGRESSION_OUTPUTS,
        seed,
        adam,
        mode,
        init_scale,
        k,
    };
    Ok(SavedModel { params, scaler, config })
}
