//! Fader gain with click-free linear amplitude ramps.

use log::warn;

use crate::signal::SampleBlock;

/// Ceiling of the operator gain range, in dB.
pub const MAX_GAIN_DB: f64 = 10.0;
/// Floor of the operator gain range, in dB.
pub const MIN_GAIN_DB: f64 = -40.0;
pub const DEFAULT_RAMP_MS: f64 = 10.0;

/// Amplitude (20·log10) convention.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

/// Result of clamping a requested gain to the legal range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedGain {
    pub requested_db: f64,
    pub applied_db: f64,
}

impl ClampedGain {
    pub fn was_clamped(&self) -> bool {
        self.requested_db != self.applied_db
    }
}

pub fn clamp_gain_db(requested_db: f64) -> ClampedGain {
    let applied_db = if requested_db.is_nan() {
        0.0
    } else {
        requested_db.clamp(MIN_GAIN_DB, MAX_GAIN_DB)
    };
    if applied_db != requested_db {
        warn!("gain {requested_db} dB clamped to {applied_db} dB");
    }
    ClampedGain {
        requested_db,
        applied_db,
    }
}

/// Per-channel gain state. A new target is reached over `ramp_len` samples
/// by linear interpolation in amplitude from wherever the gain currently is.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRamp {
    current: f64,
    start: f64,
    target: f64,
    ramp_len: usize,
    pos: usize,
    target_db: f64,
}

impl GainRamp {
    pub fn new(gain_db: f64, ramp_ms: f64, rate: f64) -> Self {
        let applied = clamp_gain_db(gain_db).applied_db;
        let amp = db_to_amplitude(applied);
        Self {
            current: amp,
            start: amp,
            target: amp,
            ramp_len: ((ramp_ms.max(0.0) / 1000.0) * rate).round() as usize,
            pos: 0,
            target_db: applied,
        }
    }

    pub fn ramp_len(&self) -> usize {
        self.ramp_len
    }

    pub fn target_db(&self) -> f64 {
        self.target_db
    }

    pub fn current_amplitude(&self) -> f64 {
        self.current
    }

    pub fn is_ramping(&self) -> bool {
        self.pos < self.ramp_len && self.current != self.target
    }

    /// Sets a new gain target (clamped). Returns the applied value.
    pub fn set_target_db(&mut self, gain_db: f64) -> ClampedGain {
        let clamped = clamp_gain_db(gain_db);
        self.target_db = clamped.applied_db;
        self.set_target_amplitude(db_to_amplitude(clamped.applied_db));
        clamped
    }

    /// Ramps toward a raw amplitude, e.g. 0 for mute.
    pub fn set_target_amplitude(&mut self, amplitude: f64) {
        if amplitude == self.target {
            return;
        }
        self.start = self.current;
        self.target = amplitude;
        self.pos = 0;
        if self.ramp_len == 0 {
            self.current = amplitude;
        }
    }

    /// Sets the amplitude immediately, without a ramp.
    pub fn jump_to_amplitude(&mut self, amplitude: f64) {
        self.current = amplitude;
        self.start = amplitude;
        self.target = amplitude;
        self.pos = self.ramp_len;
    }

    #[inline]
    fn next_gain(&mut self) -> f64 {
        if self.pos < self.ramp_len && self.current != self.target {
            self.pos += 1;
            self.current = if self.pos == self.ramp_len {
                self.target
            } else {
                self.start + (self.target - self.start) * (self.pos as f64 / self.ramp_len as f64)
            };
        }
        self.current
    }

    pub fn process_in_place(&mut self, samples: &mut [f64]) {
        if !self.is_ramping() {
            let g = self.current;
            if g != 1.0 {
                samples.iter_mut().for_each(|v| *v *= g);
            }
            return;
        }
        for v in samples {
            *v *= self.next_gain();
        }
    }
}

/// Scales `block` toward `gain_db`, ramping from the state's current gain.
pub fn apply_gain(block: &SampleBlock, gain_db: f64, ramp: &mut GainRamp) -> SampleBlock {
    if gain_db != ramp.target_db() {
        ramp.set_target_db(gain_db);
    }
    let mut samples = block.samples.clone();
    ramp.process_in_place(&mut samples);
    SampleBlock::at(samples, block.rate, block.start_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_sine(len: usize, freq: f64, rate: f64) -> SampleBlock {
        SampleBlock::new(
            (0..len).map(|n| (2.0 * PI * freq * n as f64 / rate).sin()).collect(),
            rate,
        )
    }

    #[test]
    fn zero_db_is_identity() {
        let b = unit_sine(1000, 250.0, 8000.0);
        let mut r = GainRamp::new(0.0, 10.0, 8000.0);
        assert_eq!(apply_gain(&b, 0.0, &mut r), b);
    }

    #[test]
    fn six_db_doubles_amplitude() {
        let b = unit_sine(8000, 250.0, 8000.0);
        let mut r = GainRamp::new(0.0, 10.0, 8000.0);
        let out = apply_gain(&b, 20.0 * 2f64.log10(), &mut r);
        let peak = out.samples[4000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 2.0).abs() < 1e-9, "peak {peak}");
    }

    #[test]
    fn step_ramp_has_80_monotone_transition_samples() {
        let rate = 8000.0;
        let mut r = GainRamp::new(0.0, 10.0, rate);
        assert_eq!(r.ramp_len(), 80);
        let ones = SampleBlock::new(vec![1.0; 200], rate);
        let out = apply_gain(&ones, 10.0, &mut r).samples;
        let target = db_to_amplitude(10.0);
        // samples 0..80 move away from unity; the 80th lands on the target
        assert!(out[..80].iter().all(|&v| v > 1.0));
        assert!(out[78] < target);
        assert_eq!(out[79], target);
        assert!(out.windows(2).all(|w| w[1] >= w[0]));
        assert!(out[80..].iter().all(|&v| v == target));
    }

    #[test]
    fn ramp_continues_across_blocks() {
        let rate = 8000.0;
        let mut whole = GainRamp::new(-6.0, 10.0, rate);
        let mut split = whole.clone();
        let ones = vec![1.0; 256];
        let a = apply_gain(&SampleBlock::new(ones.clone(), rate), 6.0, &mut whole).samples;
        let mut b = Vec::new();
        for chunk in ones.chunks(16) {
            b.extend(apply_gain(&SampleBlock::new(chunk.to_vec(), rate), 6.0, &mut split).samples);
        }
        assert_eq!(a, b);
    }

    #[test]
    fn gain_above_ceiling_is_clamped() {
        let mut r = GainRamp::new(0.0, 10.0, 8000.0);
        let c = r.set_target_db(15.0);
        assert_eq!(c.applied_db, 10.0);
        assert!(c.was_clamped());
        assert_eq!(clamp_gain_db(-60.0).applied_db, MIN_GAIN_DB);
        assert!(!clamp_gain_db(4.0).was_clamped());
    }

    #[test]
    fn gains_compose_in_steady_state() {
        for (g1, g2) in [(3.0, 4.0), (-12.0, 6.0), (-20.0, -15.5), (2.5, 7.5)] {
            let b = SampleBlock::new(vec![0.75; 400], 8000.0);
            let mut r1 = GainRamp::new(g1, 10.0, 8000.0);
            let mut r2 = GainRamp::new(g2, 10.0, 8000.0);
            let mut r12 = GainRamp::new(g1 + g2, 10.0, 8000.0);
            let chained = apply_gain(&apply_gain(&b, g1, &mut r1), g2, &mut r2);
            let direct = apply_gain(&b, g1 + g2, &mut r12);
            for (a, d) in chained.samples.iter().zip(&direct.samples) {
                assert!((a - d).abs() <= 1e-12 * d.abs().max(1.0));
            }
        }
    }
}
