//! Commodity forward-curve modelling with an N-factor mean-reverting model.

pub mod calibration;
pub mod commands;
pub mod error;
pub mod factor_model;
pub mod linalg;
pub mod marketdata;
pub mod pricing;
pub mod sensitivity;
pub mod simulation;
pub mod termstructure;

pub use error::{CurveError, Result};
