use crate::domain::{Block, GpsRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowConfig {
    /// Block length: `k - 1` feature tuples plus one label.
    pub k: usize,
    pub stride: usize,
    /// Largest allowed gap between consecutive records of one block, in seconds.
    pub max_gap: i64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { k: 10, stride: 10, max_gap: 120 }
    }
}

impl WindowConfig {
    pub fn new(k: usize, stride: usize, max_gap: i64) -> Result<Self> {
        let cfg = Self { k, stride, max_gap };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::invalid("window config", format!("k = {} must be >= 3", self.k)));
        }
        if self.stride < 1 {
            return Err(Error::invalid("window config", "stride must be >= 1"));
        }
        if self.max_gap <= 0 {
            return Err(Error::invalid("window config", "max_gap must be > 0"));
        }
        Ok(())
    }
}

/// Cut each unit's stream into blocks of `k` records.
///
/// Expects `(unit_id, timestamp)` order. Windows crossing a unit boundary, a
/// non-increasing timestamp or a gap above `max_gap` are skipped.
pub fn window(records: &[GpsRecord], cfg: &WindowConfig) -> Vec<Block> {
    window_impl(records, None, cfg)
}

/// Like [`window`], carrying the stop flag of each block's label record.
pub fn window_labeled(records: &[GpsRecord], stop_flags: &[bool], cfg: &WindowConfig) -> Result<Vec<Block>> {
    if stop_flags.len() != records.len() {
        return Err(Error::Dimension(format!("{} stop flags for {} records", stop_flags.len(), records.len())));
    }
    Ok(window_impl(records, Some(stop_flags), cfg))
}

fn window_impl(records: &[GpsRecord], stop_flags: Option<&[bool]>, cfg: &WindowConfig) -> Vec<Block> {
    let k = cfg.k;
    let mut blocks = Vec::new();
    let mut run_start = 0;
    while run_start < records.len() {
        let unit = &records[run_start].unit_id;
        let run_end = run_start + records[run_start..].iter().take_while(|r| &r.unit_id == unit).count();
        let mut start = run_start;
        while start + k <= run_end {
            let win = &records[start..start + k];
            let contiguous = win.windows(2).all(|w| {
                let gap = (w[1].timestamp - w[0].timestamp).num_seconds();
                gap > 0 && gap <= cfg.max_gap
            });
            if contiguous {
                blocks.push(Block {
                    features: win[..k - 1].iter().map(GpsRecord::tuple).collect(),
                    label: win[k - 1].tuple(),
                    is_stop: stop_flags.map(|f| f[start + k - 1]),
                    unit_id: unit.clone(),
                    start_time: win[0].timestamp,
                    end_time: win[k - 1].timestamp,
                });
            }
            start += cfg.stride;
        }
        run_start = run_end;
    }
    blocks
}
