//! Butterworth band-pass design and biquad cascade realization.
//!
//! The band-pass is derived from an analog Butterworth low-pass prototype of
//! `order` poles by the low-pass to band-pass substitution
//! `p = (s² + ω0²) / (B·s)`, then mapped to the z-plane by the bilinear
//! transform with both band edges pre-warped. Each prototype pole yields two
//! band-pass poles, so an order-N design has 2N poles and N biquad sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampleBlock;

pub const DEFAULT_LOW_CUT: f64 = 80.0;
pub const DEFAULT_HIGH_CUT: f64 = 1000.0;
pub const DEFAULT_ORDER: u32 = 4;
pub const LEGAL_ORDERS: [u32; 3] = [2, 4, 8];

/// Band edges in Hz and the prototype order (poles per skirt; the realized
/// filter has twice as many poles).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub low_cut: f64,
    pub high_cut: f64,
    #[serde(default = "default_order")]
    pub order: u32,
}

fn default_order() -> u32 {
    DEFAULT_ORDER
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            low_cut: DEFAULT_LOW_CUT,
            high_cut: DEFAULT_HIGH_CUT,
            order: DEFAULT_ORDER,
        }
    }
}

impl FilterSpec {
    pub fn new(low_cut: f64, high_cut: f64, order: u32) -> Self {
        Self {
            low_cut,
            high_cut,
            order,
        }
    }

    pub fn validate(&self, rate: f64) -> Result<()> {
        let nyquist = rate / 2.0;
        if !LEGAL_ORDERS.contains(&self.order) {
            return Err(Error::Design(format!("order {} not in {:?}", self.order, LEGAL_ORDERS)));
        }
        if !(self.low_cut > 0.0 && self.low_cut.is_finite()) {
            return Err(Error::Design(format!("low cut {} Hz must be positive", self.low_cut)));
        }
        if self.high_cut >= nyquist {
            return Err(Error::Design(format!(
                "high cut {} Hz at or above Nyquist ({nyquist} Hz)",
                self.high_cut
            )));
        }
        if self.low_cut >= self.high_cut {
            return Err(Error::Design(format!(
                "low cut {} Hz not below high cut {} Hz",
                self.low_cut, self.high_cut
            )));
        }
        Ok(())
    }
}

/// One second-order section in transposed direct form II.
///
/// `y = b0·x + s1; s1 = b1·x − a1·y + s2; s2 = b2·x − a2·y`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    s1: f64,
    s2: f64,
}

impl Biquad {
    pub fn new(b0: f64, b1: f64, b2: f64, a1: f64, a2: f64) -> Self {
        Self {
            b0,
            b1,
            b2,
            a1,
            a2,
            s1: 0.0,
            s2: 0.0,
        }
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.s1;
        self.s1 = self.b1 * x - self.a1 * y + self.s2;
        self.s2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.s1 = 0.0;
        self.s2 = 0.0;
    }

    /// Roots of `z² + a1·z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let disc = Complex64::new(self.a1 * self.a1 - 4.0 * self.a2, 0.0).sqrt();
        let a1 = Complex64::new(self.a1, 0.0);
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }

    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }
}

/// Series of biquads designed for one sample rate, with persistent state.
#[derive(Debug, Clone, PartialEq)]
pub struct BiquadCascade {
    sections: Vec<Biquad>,
    rate: f64,
}

impl BiquadCascade {
    pub fn from_sections(sections: Vec<Biquad>, rate: f64) -> Self {
        Self { sections, rate }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn reset(&mut self) {
        self.sections.iter_mut().for_each(Biquad::reset);
    }

    #[inline]
    pub fn tick(&mut self, x: f64) -> f64 {
        self.sections.iter_mut().fold(x, |acc, s| s.tick(acc))
    }

    pub fn process_in_place(&mut self, samples: &mut [f64]) {
        for v in samples {
            *v = self.tick(*v);
        }
    }

    /// Filters one block, carrying state into the next call.
    pub fn filter_block(&mut self, block: &SampleBlock) -> Result<SampleBlock> {
        if block.rate != self.rate {
            return Err(Error::Contract(format!(
                "block at {} Hz fed to cascade designed for {} Hz",
                block.rate, self.rate
            )));
        }
        let mut samples = block.samples.clone();
        self.process_in_place(&mut samples);
        Ok(SampleBlock::at(samples, block.rate, block.start_index))
    }

    /// Complex response at `freq` Hz.
    pub fn response(&self, freq: f64) -> Complex64 {
        let omega = 2.0 * PI * freq / self.rate;
        self.sections
            .iter()
            .map(|s| s.response(omega))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    pub fn magnitude(&self, freq: f64) -> f64 {
        self.response(freq).norm()
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_radius() < 1.0
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }

    /// Group delay in seconds at `freq`, from a central difference of the
    /// per-section phase.
    pub fn group_delay(&self, freq: f64) -> f64 {
        let omega = 2.0 * PI * freq / self.rate;
        let h = 1e-5;
        let samples: f64 = self
            .sections
            .iter()
            .map(|s| {
                let ratio = s.response(omega + h) / s.response(omega - h);
                -ratio.arg() / (2.0 * h)
            })
            .sum();
        samples / self.rate
    }
}

/// Designs the Butterworth band-pass described by `spec` at `rate` Hz.
pub fn design_bandpass(spec: &FilterSpec, rate: f64) -> Result<BiquadCascade> {
    spec.validate(rate)?;

    // Pre-warped edges on the bilinear frequency axis, s = (1 − z⁻¹)/(1 + z⁻¹).
    let w_lo = (PI * spec.low_cut / rate).tan();
    let w_hi = (PI * spec.high_cut / rate).tan();
    let bandwidth = w_hi - w_lo;
    let center_sq = w_lo * w_hi;

    let n = spec.order as usize;
    let mut sections = Vec::with_capacity(n);
    // Upper-half-plane prototype poles; their conjugates give the mirrored
    // band-pass poles, so each pass yields two conjugate-pair sections.
    for k in 0..n / 2 {
        let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
        let proto = Complex64::from_polar(1.0, theta);
        let pb = proto * bandwidth;
        let root = (pb * pb - 4.0 * center_sq).sqrt();
        for pole in [(pb + root) / 2.0, (pb - root) / 2.0] {
            // Analog section B·s / (s² − 2·Re(p)·s + |p|²).
            let c1 = -2.0 * pole.re;
            let c0 = pole.norm_sqr();
            let d0 = 1.0 + c1 + c0;
            let d1 = 2.0 * (c0 - 1.0);
            let d2 = 1.0 - c1 + c0;
            sections.push(Biquad::new(bandwidth / d0, 0.0, -bandwidth / d0, d1 / d0, d2 / d0));
        }
    }

    let cascade = BiquadCascade::from_sections(sections, rate);
    if !cascade.is_stable() {
        return Err(Error::Design(format!(
            "unstable realization (max pole radius {})",
            cascade.max_pole_radius()
        )));
    }
    Ok(cascade)
}

/// Free-function form of [`BiquadCascade::filter_block`].
pub fn filter_block(cascade: &mut BiquadCascade, block: &SampleBlock) -> Result<SampleBlock> {
    cascade.filter_block(block)
}
