use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.6, validation: 0.2, test: 0.2 }
    }
}

impl SplitRatios {
    pub fn new(train: f64, validation: f64, test: f64) -> Result<Self> {
        let r = Self { train, validation, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.validation, self.test];
        if all.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::invalid("split ratios", format!("{all:?} must each lie in (0, 1)")));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("split ratios", format!("{all:?} must sum to 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle, then partition. Validation and test sizes are floored and
/// the remainder goes to training.
pub fn split<T>(items: Vec<T>, ratios: &SplitRatios, seed: u64) -> Result<Split<T>> {
    ratios.validate()?;
    let n = items.len();
    if n < 5 {
        return Err(Error::TooFewBlocks(n));
    }
    // Guard against products like 0.7 * 10 = 6.999...
    let n_val = (n as f64 * ratios.validation + 1e-9).floor() as usize;
    let n_test = (n as f64 * ratios.test + 1e-9).floor() as usize;

    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut take = |idx: &[usize]| idx.iter().map(|&i| slots[i].take().expect("index used once")).collect::<Vec<T>>();
    let test = take(&order[..n_test]);
    let validation = take(&order[n_test..n_test + n_val]);
    let train = take(&order[n_test + n_val..]);
    Ok(Split { train, validation, test })
}
