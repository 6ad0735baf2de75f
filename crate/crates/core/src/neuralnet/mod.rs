//! Single-layer LSTM trained from scratch with backpropagation through time.
//!
//! Gates read the concatenation `[h_{t-1}, x_t]`. The gate weight matrix stacks
//! the forget, update, candidate and output gates (in that order) into one
//! `4H x (H + I)` matrix. The final hidden state goes through a ReLU and a dense
//! head producing 3 regression outputs, plus 2 class logits in stop mode.

mod activation;
mod adam;
mod cell;
mod io;
mod loss;
mod network;
mod params;
mod train;

pub use activation::{argmax_class, relu, sigmoid, softmax};
pub use adam::{Adam, AdamConfig};
pub use cell::lstm_cell_step;
pub use io::{load_model, save_model, SavedModel, MODEL_MAGIC, MODEL_VERSION};
pub use loss::{loss, loss_gradient, Target};
pub use network::{backward, forward, forward_batch, Prediction, Sample};
pub use params::{HeadMode, LstmParams, LstmState};
pub use train::{evaluate_loss, samples_from_blocks, train, EpochLoss, TrainConfig, TrainingTrace};
