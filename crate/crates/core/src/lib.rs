//! Runtime anomaly monitoring and graduated safety guards for a
//! perception-driven lane keeper.

pub mod autoencoder;
pub mod calibration;
pub mod error;
pub mod evalkit;
pub mod experiment;
pub mod frame;
pub mod guard;
pub mod monitor;
pub mod simworld;
pub mod timeseries;

pub use error::{Error, Result};
pub use frame::{Frame, FrameShape};
