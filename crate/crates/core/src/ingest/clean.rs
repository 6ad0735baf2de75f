use std::fmt;

use crate::domain::GpsRecord;
use crate::geo::distance_m;

use super::sorted_order;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CleanConfig {
    /// A zero-speed record further than this from its predecessor is treated as noise.
    pub jitter_epsilon_m: f64,
}

impl Default for CleanConfig {
    fn default() -> Self {
        Self { jitter_epsilon_m: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub removed_zero_speed_moving: usize,
    pub removed_duplicates: usize,
    pub removed_malformed: usize,
}

impl CleaningReport {
    pub fn removed(&self) -> usize {
        self.removed_zero_speed_moving + self.removed_duplicates + self.removed_malformed
    }

    /// Chain a parse report with the report of the cleaning run on its output.
    pub fn then(self, later: CleaningReport) -> CleaningReport {
        CleaningReport {
            rows_read: self.rows_read,
            rows_kept: later.rows_kept,
            removed_zero_speed_moving: self.removed_zero_speed_moving + later.removed_zero_speed_moving,
            removed_duplicates: self.removed_duplicates + later.removed_duplicates,
            removed_malformed: self.removed_malformed + later.removed_malformed,
        }
    }
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows_read={}", self.rows_read)?;
        writeln!(f, "rows_kept={}", self.rows_kept)?;
        writeln!(f, "removed_zero_speed_moving={}", self.removed_zero_speed_moving)?;
        writeln!(f, "removed_duplicates={}", self.removed_duplicates)?;
        writeln!(f, "removed_malformed={}", self.removed_malformed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Kept,
    /// Claims zero speed while the position moved.
    ZeroSpeedMoving,
    /// Same position and speed as the preceding kept record of the unit.
    Duplicate,
}

/// Verdict per input record (indexed like `records`).
///
/// Each record is compared with the last *kept* record of the same unit, which
/// makes cleaning idempotent.
pub fn classify(records: &[GpsRecord], cfg: &CleanConfig) -> Vec<Verdict> {
    let mut verdicts = vec![Verdict::Kept; records.len()];
    let mut prev: Option<&GpsRecord> = None;
    for i in sorted_order(records) {
        let rec = &records[i];
        if let Some(p) = prev.filter(|p| p.unit_id == rec.unit_id) {
            if p.latitude == rec.latitude && p.longitude == rec.longitude && p.speed == rec.speed {
                verdicts[i] = Verdict::Duplicate;
                continue;
            }
            if rec.speed == 0.0 && distance_m(p.latitude, p.longitude, rec.latitude, rec.longitude) > cfg.jitter_epsilon_m {
                verdicts[i] = Verdict::ZeroSpeedMoving;
                continue;
            }
        }
        prev = Some(rec);
    }
    verdicts
}

/// Remove GPS noise; output is in `(unit_id, timestamp)` order.
pub fn clean(records: &[GpsRecord], cfg: &CleanConfig) -> (Vec<GpsRecord>, CleaningReport) {
    let verdicts = classify(records, cfg);
    let mut report = CleaningReport { rows_read: records.len(), ..Default::default() };
    let mut kept = Vec::with_capacity(records.len());
    for i in sorted_order(records) {
        match verdicts[i] {
            Verdict::Kept => kept.push(records[i].clone()),
            Verdict::ZeroSpeedMoving => report.removed_zero_speed_moving += 1,
            Verdict::Duplicate => report.removed_duplicates += 1,
        }
    }
    report.rows_kept = kept.len();
    (kept, report)
}
