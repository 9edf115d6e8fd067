use serde::{Deserialize, Serialize};

use super::combine::CombineMode;
use super::filter::{design_bandpass, BiquadCascade, FilterSpec};
use super::gain::{clamp_gain_db, ClampedGain, GainRamp, DEFAULT_RAMP_MS};
use super::meter::RmsMeter;
use crate::error::{Error, Result};

/// Window of the live pre/post level meters.
pub const LEVEL_WINDOW_MS: f64 = 100.0;

/// Per-tool processing configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStrip {
    #[serde(default)]
    pub mode: CombineMode,
    /// `None` bypasses the band-pass.
    #[serde(default = "default_filter")]
    pub filter: Option<FilterSpec>,
    #[serde(default)]
    pub gain_db: f64,
    /// Noise-gate level used by trial analysis; not applied in the live path.
    #[serde(default)]
    pub gate_threshold: f64,
    #[serde(default = "default_ramp_ms")]
    pub ramp_ms: f64,
    #[serde(default)]
    pub muted: bool,
}

fn default_filter() -> Option<FilterSpec> {
    Some(FilterSpec::default())
}

fn default_ramp_ms() -> f64 {
    DEFAULT_RAMP_MS
}

impl Default for ChannelStrip {
    fn default() -> Self {
        Self {
            mode: CombineMode::default(),
            filter: default_filter(),
            gain_db: 0.0,
            gate_threshold: 0.0,
            ramp_ms: DEFAULT_RAMP_MS,
            muted: false,
        }
    }
}

impl ChannelStrip {
    /// Mode F1, 0 dB, no filter: output is the x-axis unchanged.
    pub fn passthrough() -> Self {
        Self {
            mode: CombineMode::F1,
            filter: None,
            ..Self::default()
        }
    }

    pub fn validate(&self, rate: f64) -> Result<()> {
        if let Some(spec) = &self.filter {
            spec.validate(rate)?;
        }
        if !self.gain_db.is_finite() {
            return Err(Error::Config(format!("gain {} dB is not finite", self.gain_db)));
        }
        if !(self.gate_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "gate threshold {} must be non-negative",
                self.gate_threshold
            )));
        }
        if !(self.ramp_ms >= 0.0) {
            return Err(Error::Config(format!("ramp {} ms must be non-negative", self.ramp_ms)));
        }
        Ok(())
    }
}

/// Running state of one channel strip: combine → band-pass → gain, metered
/// before and after the gain stage.
#[derive(Debug, Clone)]
pub struct StripProcessor {
    strip: ChannelStrip,
    rate: f64,
    cascade: Option<BiquadCascade>,
    gain: GainRamp,
    pre_meter: RmsMeter,
    post_meter: RmsMeter,
    scratch: Vec<f64>,
}

impl StripProcessor {
    pub fn new(mut strip: ChannelStrip, rate: f64) -> Result<Self> {
        strip.validate(rate)?;
        strip.gain_db = clamp_gain_db(strip.gain_db).applied_db;
        let cascade = strip.filter.map(|spec| design_bandpass(&spec, rate)).transpose()?;
        let mut gain = GainRamp::new(strip.gain_db, strip.ramp_ms, rate);
        if strip.muted {
            gain.jump_to_amplitude(0.0);
        }
        Ok(Self {
            strip,
            rate,
            cascade,
            gain,
            pre_meter: RmsMeter::new(LEVEL_WINDOW_MS, rate),
            post_meter: RmsMeter::new(LEVEL_WINDOW_MS, rate),
            scratch: Vec::new(),
        })
    }

    pub fn strip(&self) -> &ChannelStrip {
        &self.strip
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn set_gain(&mut self, gain_db: f64) -> ClampedGain {
        let clamped = clamp_gain_db(gain_db);
        self.strip.gain_db = clamped.applied_db;
        if !self.strip.muted {
            self.gain.set_target_db(clamped.applied_db);
        }
        clamped
    }

    pub fn set_mode(&mut self, mode: CombineMode) {
        self.strip.mode = mode;
    }

    /// Replaces the band-pass; filter state restarts from zero.
    pub fn set_filter(&mut self, filter: Option<FilterSpec>) -> Result<()> {
        let cascade = filter.map(|spec| design_bandpass(&spec, self.rate)).transpose()?;
        self.strip.filter = filter;
        self.cascade = cascade;
        Ok(())
    }

    pub fn set_muted(&mut self, muted: bool) {
        self.strip.muted = muted;
        if muted {
            self.gain.set_target_amplitude(0.0);
        } else {
            self.gain.set_target_db(self.strip.gain_db);
        }
    }

    /// Latest (pre-gain, post-gain) RMS levels.
    pub fn levels(&self) -> (f64, f64) {
        (self.pre_meter.level(), self.post_meter.level())
    }

    /// Processes one block of tri-axis input into `out` (same length).
    pub fn process(&mut self, x: &[f64], y: &[f64], z: &[f64], out: &mut [f64]) {
        debug_assert!(x.len() == out.len() && y.len() == out.len() && z.len() == out.len());
        let mode = self.strip.mode;
        for (n, o) in out.iter_mut().enumerate() {
            *o = mode.combine(x[n], y[n], z[n]);
        }
        if let Some(cascade) = self.cascade.as_mut() {
            cascade.process_in_place(out);
        }
        for &v in out.iter() {
            self.pre_meter.push(v);
        }
        self.gain.process_in_place(out);
        for &v in out.iter() {
            self.post_meter.push(v);
        }
    }

    /// Convenience for whole-buffer processing outside the pipeline.
    pub fn process_vec(&mut self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let mut out = std::mem::take(&mut self.scratch);
        out.clear();
        out.resize(x.len(), 0.0);
        self.process(x, y, z, &mut out);
        let result = out.clone();
        self.scratch = out;
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passthrough_is_bit_exact() {
        let x: Vec<f64> = (0..300).map(|n| (n as f64 * 0.37).sin()).collect();
        let y = vec![5.0; 300];
        let mut p = StripProcessor::new(ChannelStrip::passthrough(), 8000.0).unwrap();
        assert_eq!(p.process_vec(&x, &y, &y), x);
    }

    #[test]
    fn mute_ramps_to_silence_and_back() {
        let ones = vec![1.0; 400];
        let mut p = StripProcessor::new(ChannelStrip::passthrough(), 8000.0).unwrap();
        p.set_muted(true);
        let out = p.process_vec(&ones, &ones, &ones);
        assert!(out[100..].iter().all(|&v| v == 0.0));
        p.set_muted(false);
        let out = p.process_vec(&ones, &ones, &ones);
        assert!(out[100..].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn muted_from_config_starts_silent() {
        let strip = ChannelStrip {
            muted: true,
            ..ChannelStrip::passthrough()
        };
        let mut p = StripProcessor::new(strip, 8000.0).unwrap();
        let ones = vec![1.0; 64];
        assert!(p.process_vec(&ones, &ones, &ones).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mode_switch_changes_combination() {
        let strip = ChannelStrip {
            filter: None,
            ..ChannelStrip::default()
        };
        let mut p = StripProcessor::new(strip, 8000.0).unwrap();
        let (x, y, z) = (vec![1.0; 8], vec![2.0; 8], vec![3.0; 8]);
        assert!(p.process_vec(&x, &y, &z).iter().all(|&v| v == 6.0));
        p.set_mode(CombineMode::F1);
        assert!(p.process_vec(&x, &y, &z).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_filter_rejected() {
        let strip = ChannelStrip {
            filter: Some(FilterSpec::new(80.0, 5000.0, 4)),
            ..ChannelStrip::default()
        };
        assert!(StripProcessor::new(strip, 8000.0).is_err());
    }
}
