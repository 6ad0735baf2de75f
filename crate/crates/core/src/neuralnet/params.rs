use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeadMode {
    /// Next `<lat, lon, speed>` only.
    Regression,
    /// Next `<lat, lon, speed>` plus stop / not-stop logits.
    Stop,
}

impl HeadMode {
    pub const REGRESSION_OUTPUTS: usize = 3;
    pub const CLASSES: usize = 2;

    pub fn output_size(self) -> usize {
        match self {
            HeadMode::Regression => Self::REGRESSION_OUTPUTS,
            HeadMode::Stop => Self::REGRESSION_OUTPUTS + Self::CLASSES,
        }
    }

    pub fn from_output_size(n: usize) -> Option<Self> {
        match n {
            3 => Some(HeadMode::Regression),
            5 => Some(HeadMode::Stop),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeadMode::Regression => "regression",
            HeadMode::Stop => "stop",
        }
    }
}

impl std::str::FromStr for HeadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(HeadMode::Regression),
            "stop" => Ok(HeadMode::Stop),
            other => Err(Error::invalid("mode", format!("`{other}` is neither `regression` nor `stop`"))),
        }
    }
}

/// Network weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H x (H + I)`, row blocks ordered forget, update, candidate, output.
    pub gates: Array2<f64>,
    pub gate_bias: Array1<f64>,
    /// `O x H`.
    pub head: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize, output_size: usize) -> Self {
        Self {
            gates: Array2::zeros((4 * hidden_size, hidden_size + input_size)),
            gate_bias: Array1::zeros(4 * hidden_size),
            head: Array2::zeros((output_size, hidden_size)),
            head_bias: Array1::zeros(output_size),
        }
    }

    /// Weights uniform in `(-scale, scale)`, biases zero.
    pub fn init_uniform<R: Rng>(input_size: usize, hidden_size: usize, output_size: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size, output_size);
        if scale > 0.0 {
            let dist = Uniform::new(-scale, scale).expect("positive scale");
            p.gates.iter_mut().for_each(|w| *w = dist.sample(rng));
            p.head.iter_mut().for_each(|w| *w = dist.sample(rng));
        }
        p
    }

    pub fn hidden_size(&self) -> usize {
        self.gate_bias.len() / 4
    }

    pub fn input_size(&self) -> usize {
        self.gates.ncols() - self.hidden_size()
    }

    pub fn output_size(&self) -> usize {
        self.head_bias.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.gates.len() + self.gate_bias.len() + self.head.len() + self.head_bias.len()
    }

    fn gate(&self, i: usize) -> ArrayView2<'_, f64> {
        let h = self.hidden_size();
        self.gates.slice(s![i * h..(i + 1) * h, ..])
    }

    pub fn forget_gate(&self) -> ArrayView2<'_, f64> {
        self.gate(0)
    }

    pub fn update_gate(&self) -> ArrayView2<'_, f64> {
        self.gate(1)
    }

    pub fn candidate_gate(&self) -> ArrayView2<'_, f64> {
        self.gate(2)
    }

    pub fn output_gate(&self) -> ArrayView2<'_, f64> {
        self.gate(3)
    }

    /// Flat views in serialization order: gates, gate bias, head, head bias.
    pub fn tensors(&self) -> [&[f64]; 4] {
        [
            self.gates.as_slice().expect("standard layout"),
            self.gate_bias.as_slice().expect("standard layout"),
            self.head.as_slice().expect("standard layout"),
            self.head_bias.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.gates.as_slice_mut().expect("standard layout"),
            self.gate_bias.as_slice_mut().expect("standard layout"),
            self.head.as_slice_mut().expect("standard layout"),
            self.head_bias.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hidden_size();
        if h == 0 || self.gate_bias.len() != 4 * h || self.gates.nrows() != 4 * h || self.gates.ncols() <= h {
            return Err(Error::Dimension(format!("gate matrix {:?} and bias {} are inconsistent", self.gates.dim(), self.gate_bias.len())));
        }
        if self.head.ncols() != h || self.head.nrows() != self.head_bias.len() {
            return Err(Error::Dimension(format!("head {:?} does not match hidden size {h}", self.head.dim())));
        }
        if self.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::invalid("LSTM parameters", "non-finite entry"));
        }
        Ok(())
    }

    pub(crate) fn scale(&mut self, k: f64) {
        self.gates *= k;
        self.gate_bias *= k;
        self.head *= k;
        self.head_bias *= k;
    }
}

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub c: Array1<f64>,
    pub h: Array1<f64>,
}

impl LstmState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self { c: Array1::zeros(hidden_size), h: Array1::zeros(hidden_size) }
    }
}
