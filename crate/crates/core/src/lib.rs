//! Reconstruct public-transport feeds (GTFS) from raw bus GPS traces.
//!
//! The pipeline cleans and windows tracker readings, trains an LSTM to predict
//! the next position of a bus (and whether that position is a stop), turns the
//! predictions into stops, trips and routes, and exports a validated GTFS zip.
//! A synthetic fleet simulator provides data and ground truth.

pub mod config;
pub mod domain;
pub mod error;
pub mod geo;
pub mod gtfs;
pub mod ingest;
pub mod neuralnet;
pub mod pipeline;
pub mod predictor;
pub mod simulator;
pub mod transitgraph;

pub use error::{Error, Result};
