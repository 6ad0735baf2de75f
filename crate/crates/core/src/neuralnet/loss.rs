use super::params::HeadMode;
use crate::error::{Error, Result};

/// Training target in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub coords: [f64; 3],
    /// Required in stop mode.
    pub stop: Option<bool>,
}

/// Loss and its gradient with respect to the raw head outputs.
///
/// Regression: mean squared error over the three coordinates. Stop mode adds
/// the cross-entropy of the softmax over the two trailing logits, class 1
/// meaning "stop".
pub fn loss_gradient(output: &[f64], target: &Target, mode: HeadMode, grad: &mut [f64]) -> Result<f64> {
    if output.len() != mode.output_size() || grad.len() != output.len() {
        return Err(Error::Dimension(format!("{} outputs for {} mode", output.len(), mode.as_str())));
    }
    let n = HeadMode::REGRESSION_OUTPUTS;
    let mut value = 0.0;
    for j in 0..n {
        let d = output[j] - target.coords[j];
        value += d * d / n as f64;
        grad[j] = 2.0 * d / n as f64;
    }
    if mode == HeadMode::Stop {
        let Some(stop) = target.stop else {
            return Err(Error::Dimension("stop mode needs a stop flag on every target".into()));
        };
        let logits = &output[n..];
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|y| (y - max).exp()).sum();
        let log_z = max + sum.ln();
        let class = usize::from(stop);
        value += log_z - logits[class];
        for (k, &y) in logits.iter().enumerate() {
            grad[n + k] = (y - log_z).exp() - if k == class { 1.0 } else { 0.0 };
        }
    }
    Ok(value)
}

pub fn loss(output: &[f64], target: &Target, mode: HeadMode) -> Result<f64> {
    let mut scratch = vec![0.0; output.len()];
    loss_gradient(output, target, mode, &mut scratch)
}
