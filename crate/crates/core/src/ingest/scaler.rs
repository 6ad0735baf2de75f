use crate::domain::{Block, FeatureRange, FeatureTuple, GpsRecord, ScalerParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

pub fn fit_scaler_tuples<I: IntoIterator<Item = FeatureTuple>>(tuples: I) -> Result<ScalerParams> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut n = 0usize;
    for t in tuples {
        for (j, v) in t.to_array().into_iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
        n += 1;
    }
    if n < 2 {
        return Err(Error::DegenerateScaler("latitude"));
    }
    Ok(ScalerParams {
        lat: FeatureRange::new("latitude", lo[0], hi[0])?,
        lon: FeatureRange::new("longitude", lo[1], hi[1])?,
        speed: FeatureRange::new("speed", lo[2], hi[2])?,
    })
}

/// Per-feature min/max over training records.
pub fn fit_scaler(records: &[GpsRecord]) -> Result<ScalerParams> {
    fit_scaler_tuples(records.iter().map(GpsRecord::tuple))
}

/// Fit over every tuple (features and label) of the training blocks.
pub fn fit_scaler_blocks(blocks: &[Block]) -> Result<ScalerParams> {
    fit_scaler_tuples(blocks.iter().flat_map(|b| b.features.iter().copied().chain(std::iter::once(b.label))))
}

pub fn apply_scaler(tuple: FeatureTuple, params: &ScalerParams, direction: Direction) -> FeatureTuple {
    match direction {
        Direction::Forward => params.forward(tuple),
        Direction::Inverse => params.inverse(tuple),
    }
}
