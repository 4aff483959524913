//! Online calibration to vanilla vols and offline calibration to history.

pub mod offline;
pub mod online;

pub use offline::*;
pub use online::*;
