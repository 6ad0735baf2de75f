use std::borrow::Borrow;

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};

use super::activation::{relu, sigmoid, softmax};
use super::cell::lstm_cell_step;
use super::loss::{loss_gradient, Target};
use super::params::{HeadMode, LstmParams, LstmState};
use crate::error::{Error, Result};

/// Raw head outputs for one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub outputs: Vec<f64>,
}

impl Prediction {
    pub fn coords(&self) -> [f64; 3] {
        [self.outputs[0], self.outputs[1], self.outputs[2]]
    }

    pub fn logits(&self) -> Option<&[f64]> {
        (self.outputs.len() > HeadMode::REGRESSION_OUTPUTS).then(|| &self.outputs[HeadMode::REGRESSION_OUTPUTS..])
    }

    /// Softmax probability of the "stop" class, in stop mode.
    pub fn stop_probability(&self) -> Option<f64> {
        self.logits().map(|l| softmax(l)[1])
    }
}

/// One training example: a `T x I` input sequence and its target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub inputs: Array2<f64>,
    pub target: Target,
}

/// Run a sequence from the zero state and apply the head.
pub fn forward(inputs: ArrayView2<'_, f64>, params: &LstmParams) -> Result<Prediction> {
    if inputs.nrows() == 0 {
        return Err(Error::Dimension("empty input sequence".into()));
    }
    let mut state = LstmState::zeros(params.hidden_size());
    for x in inputs.rows() {
        state = lstm_cell_step(x, &state, params)?;
    }
    let hidden = state.h.mapv(relu);
    let out: Array1<f64> = params.head.dot(&hidden) + &params.head_bias;
    Ok(Prediction { outputs: out.to_vec() })
}

/// Activations cached by the batched forward pass.
struct BatchTape {
    /// `[h_{t-1}, x_t]` per step: `T x B x (H + I)`.
    joined: Array3<f64>,
    /// Activated gates per step: `T x B x 4H`.
    gates: Array3<f64>,
    /// Cell states `c_0 .. c_T`: `(T + 1) x B x H`.
    cells: Array3<f64>,
    /// `tanh(c_t)` for `t = 1 .. T`: `T x B x H`.
    cells_tanh: Array3<f64>,
    /// `relu(h_T)`: `B x H`.
    head_input: Array2<f64>,
    /// `h_T`: `B x H`.
    last_hidden: Array2<f64>,
    outputs: Array2<f64>,
}

fn check_batch(inputs: &[ArrayView2<'_, f64>], params: &LstmParams) -> Result<usize> {
    let Some(first) = inputs.first() else {
        return Err(Error::Dimension("empty batch".into()));
    };
    let steps = first.nrows();
    if steps == 0 {
        return Err(Error::Dimension("empty input sequence".into()));
    }
    for x in inputs {
        if x.nrows() != steps || x.ncols() != params.input_size() {
            return Err(Error::Dimension(format!("batch mixes shapes: {:?} vs {steps}x{}", x.dim(), params.input_size())));
        }
    }
    Ok(steps)
}

fn run_batch(inputs: &[ArrayView2<'_, f64>], params: &LstmParams) -> Result<BatchTape> {
    let steps = check_batch(inputs, params)?;
    let (b, h, i) = (inputs.len(), params.hidden_size(), params.input_size());
    let mut tape = BatchTape {
        joined: Array3::zeros((steps, b, h + i)),
        gates: Array3::zeros((steps, b, 4 * h)),
        cells: Array3::zeros((steps + 1, b, h)),
        cells_tanh: Array3::zeros((steps, b, h)),
        head_input: Array2::zeros((b, h)),
        last_hidden: Array2::zeros((b, h)),
        outputs: Array2::zeros((b, params.output_size())),
    };
    let mut hidden = Array2::<f64>::zeros((b, h));
    for t in 0..steps {
        let mut joined = tape.joined.index_axis_mut(Axis(0), t);
        joined.slice_mut(s![.., ..h]).assign(&hidden);
        for (n, x) in inputs.iter().enumerate() {
            joined.slice_mut(s![n, h..]).assign(&x.row(t));
        }
        let mut z = tape.gates.index_axis_mut(Axis(0), t);
        general_mat_mul(1.0, &joined, &params.gates.t(), 0.0, &mut z);
        z += &params.gate_bias;
        let (prev, mut next) = tape.cells.multi_slice_mut((s![t, .., ..], s![t + 1, .., ..]));
        let mut tanh_c = tape.cells_tanh.index_axis_mut(Axis(0), t);
        for n in 0..b {
            let mut zr = z.row_mut(n);
            for j in 0..h {
                let f = sigmoid(zr[j]);
                let u = sigmoid(zr[h + j]);
                let g = zr[2 * h + j].tanh();
                let o = sigmoid(zr[3 * h + j]);
                zr[j] = f;
                zr[h + j] = u;
                zr[2 * h + j] = g;
                zr[3 * h + j] = o;
                let c = prev[[n, j]] * f + g * u;
                next[[n, j]] = c;
                let tc = c.tanh();
                tanh_c[[n, j]] = tc;
                hidden[[n, j]] = o * tc;
            }
        }
    }
    tape.head_input = hidden.mapv(relu);
    tape.last_hidden = hidden;
    general_mat_mul(1.0, &tape.head_input, &params.head.t(), 0.0, &mut tape.outputs);
    tape.outputs += &params.head_bias;
    Ok(tape)
}

/// Batched forward pass; one output row per input sequence.
pub fn forward_batch(inputs: &[ArrayView2<'_, f64>], params: &LstmParams) -> Result<Array2<f64>> {
    Ok(run_batch(inputs, params)?.outputs)
}

/// Backpropagation through time over a batch.
///
/// Returns the per-sample losses and the *sum* of the per-sample gradients.
/// Each sample's gradient is formed on its own before being added, so a
/// repeated sample contributes exactly twice its gradient.
pub fn backward<S: Borrow<Sample>>(samples: &[S], params: &LstmParams, mode: HeadMode) -> Result<(Vec<f64>, LstmParams)> {
    if params.output_size() != mode.output_size() {
        return Err(Error::ModeMismatch("parameter head width does not match the loss mode"));
    }
    let views: Vec<_> = samples.iter().map(|s| s.borrow().inputs.view()).collect();
    let tape = run_batch(&views, params)?;
    let (steps, b, h) = (tape.gates.dim().0, samples.len(), params.hidden_size());
    let width = tape.joined.dim().2;

    let mut losses = Vec::with_capacity(b);
    let mut d_out = Array2::<f64>::zeros(tape.outputs.dim());
    for (n, sample) in samples.iter().enumerate() {
        let out = tape.outputs.row(n);
        let mut grad = d_out.row_mut(n);
        losses.push(loss_gradient(out.as_slice().expect("row-major"), &sample.borrow().target, mode, grad.as_slice_mut().expect("row-major"))?);
    }

    let mut grads = LstmParams::zeros(params.input_size(), h, params.output_size());
    for n in 0..b {
        for o in 0..params.output_size() {
            let d = d_out[[n, o]];
            grads.head_bias[o] += d;
            for j in 0..h {
                grads.head[[o, j]] += d * tape.head_input[[n, j]];
            }
        }
    }

    let mut d_hidden = d_out.dot(&params.head);
    d_hidden.zip_mut_with(&tape.last_hidden, |d, &hv| {
        if hv <= 0.0 {
            *d = 0.0;
        }
    });
    let mut d_cell = Array2::<f64>::zeros((b, h));
    let mut d_gates = Array3::<f64>::zeros((steps, b, 4 * h));
    let mut d_joined = Array2::<f64>::zeros((b, width));
    for t in (0..steps).rev() {
        let act = tape.gates.index_axis(Axis(0), t);
        let prev = tape.cells.index_axis(Axis(0), t);
        let tanh_c = tape.cells_tanh.index_axis(Axis(0), t);
        let mut dz = d_gates.index_axis_mut(Axis(0), t);
        for n in 0..b {
            for j in 0..h {
                let (f, u, g, o) = (act[[n, j]], act[[n, h + j]], act[[n, 2 * h + j]], act[[n, 3 * h + j]]);
                let tc = tanh_c[[n, j]];
                let dh = d_hidden[[n, j]];
                let dc = d_cell[[n, j]] + dh * o * (1.0 - tc * tc);
                dz[[n, j]] = dc * prev[[n, j]] * f * (1.0 - f);
                dz[[n, h + j]] = dc * g * u * (1.0 - u);
                dz[[n, 2 * h + j]] = dc * u * (1.0 - g * g);
                dz[[n, 3 * h + j]] = dh * tc * o * (1.0 - o);
                d_cell[[n, j]] = dc * f;
            }
        }
        general_mat_mul(1.0, &dz, &params.gates, 0.0, &mut d_joined);
        d_hidden.assign(&d_joined.slice(s![.., ..h]));
    }

    let mut per_sample = Array2::<f64>::zeros(params.gates.dim());
    for n in 0..b {
        let dz = d_gates.slice(s![.., n, ..]);
        let joined = tape.joined.slice(s![.., n, ..]);
        general_mat_mul(1.0, &dz.t(), &joined, 0.0, &mut per_sample);
        grads.gates += &per_sample;
        grads.gate_bias += &dz.sum_axis(Axis(0));
    }
    Ok((losses, grads))
}
