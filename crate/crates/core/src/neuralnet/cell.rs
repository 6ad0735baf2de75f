use ndarray::{concatenate, Array1, ArrayView1, Axis};

use super::activation::sigmoid;
use super::params::{LstmParams, LstmState};
use crate::error::{Error, Result};

/// One LSTM step:
///
/// ```text
/// f = σ(W_f [h, x] + b_f)        u = σ(W_u [h, x] + b_u)
/// g = tanh(W_c [h, x] + b_c)     o = σ(W_o [h, x] + b_o)
/// c' = c ⊙ f + g ⊙ u             h' = o ⊙ tanh(c')
/// ```
pub fn lstm_cell_step(x: ArrayView1<'_, f64>, state: &LstmState, params: &LstmParams) -> Result<LstmState> {
    let h = params.hidden_size();
    if x.len() != params.input_size() {
        return Err(Error::Dimension(format!("input has {} features, cell expects {}", x.len(), params.input_size())));
    }
    if state.c.len() != h || state.h.len() != h {
        return Err(Error::Dimension(format!("state has size {}/{}, cell expects {h}", state.c.len(), state.h.len())));
    }
    let joined = concatenate(Axis(0), &[state.h.view(), x]).expect("1-d concatenation");
    let z: Array1<f64> = params.gates.dot(&joined) + &params.gate_bias;
    let mut c = Array1::zeros(h);
    let mut out = Array1::zeros(h);
    for j in 0..h {
        let f = sigmoid(z[j]);
        let u = sigmoid(z[h + j]);
        let g = z[2 * h + j].tanh();
        let o = sigmoid(z[3 * h + j]);
        c[j] = state.c[j] * f + g * u;
        out[j] = o * c[j].tanh();
    }
    Ok(LstmState { c, h: out })
}
