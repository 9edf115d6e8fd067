//! The per-channel processing chain: axis combination, band-pass, gain and
//! metering.

pub mod combine;
pub mod filter;
pub mod gain;
pub mod meter;
pub mod strip;

pub use combine::{axis_combine, CombineMode};
pub use filter::{design_bandpass, filter_block, Biquad, BiquadCascade, FilterSpec};
pub use gain::{apply_gain, clamp_gain_db, db_to_amplitude, ClampedGain, GainRamp, MAX_GAIN_DB, MIN_GAIN_DB};
pub use meter::{meter_rms, MeterReading, RmsMeter, METER_EMIT_HZ};
pub use strip::{ChannelStrip, StripProcessor};
