#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

//! Real-time vibrotactile feedback engine and analysis toolkit.
//!
//! Tri-axis vibration from each robot tool is combined, band-passed (80 to
//! 1000 Hz by default), gained and sent to an actuator lane. Around that
//! live path sit the analyses used to place sensors and actuators and to
//! judge the feedback: SNR, acceleration signal energy, cross-correlation
//! fidelity and thresholded RMS/ZCR trial metrics.

pub mod control;
pub mod dsp;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod placement;
pub mod session;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{SampleBlock, SignalKind, TriAxisSeries, DEFAULT_RATE};
