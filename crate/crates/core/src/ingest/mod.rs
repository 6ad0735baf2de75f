//! Data collection stage: parse tracker CSV, drop GPS noise, cut the streams
//! into fixed-length blocks and prepare them for training.

mod clean;
mod csvio;
mod scaler;
mod split;
mod stops;
mod window;

pub use clean::{classify, clean, CleanConfig, CleaningReport, Verdict};
pub use csvio::{parse_csv, write_csv, ParsedCsv};
pub use scaler::{apply_scaler, fit_scaler, fit_scaler_blocks, fit_scaler_tuples, Direction};
pub use split::{split, Split, SplitRatios};
pub use stops::inject_stop_labels;
pub use window::{window, window_labeled, WindowConfig};

use crate::domain::GpsRecord;

/// Indices of `records` in `(unit_id, timestamp)` order; stable for ties.
pub(crate) fn sorted_order(records: &[GpsRecord]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&records[a], &records[b]);
        ra.unit_id.cmp(&rb.unit_id).then(ra.timestamp.cmp(&rb.timestamp))
    });
    order
}

pub fn sort_records(records: &mut [GpsRecord]) {
    records.sort_by(|a, b| a.unit_id.cmp(&b.unit_id).then(a.timestamp.cmp(&b.timestamp)));
}
