//! Bitrate adaptation for chunked video over a slotted bandwidth trace.

pub mod baselines;
pub mod engine;
pub mod gen;
pub mod io;
pub mod model;
pub mod oracle;
pub mod predictor;
pub mod qoe;
pub mod simulator;
