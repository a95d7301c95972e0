//! Closed-loop FMCW radar simulation with learned transmit-gain control.
//!
//! The crate is split along the processing chain:
//!
//! * [`radar`] synthesizes baseband frames and range-Doppler images.
//! * [`scene`] generates dynamic point-cloud scenes and ground-truth labels.
//! * [`detect`] holds the reference CFAR detector and the scoring stack.
//! * [`nn`] is a small convolutional network kit with backpropagation.
//! * [`agent`] implements DDPG: replay, exploration noise, and updates.
//! * [`env`] wires the above into reset/step episodes.
//! * [`experiment`] drives dataset generation, training and evaluation.

pub mod agent;
pub mod detect;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod radar;
pub mod scene;
pub mod seed;
pub mod tensor;

pub use error::{Error, Result};
