//! Cross-correlation fidelity between the tool-side and handle-side signals.
//!
//! Both signals are mean-removed, the lag maximizing their normalized cross
//! correlation is found by FFT, and the Pearson coefficient of the aligned
//! overlap is reported with that lag.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::dsp::{axis_combine, CombineMode};
use crate::error::{Error, Result};
use crate::signal::{SampleBlock, TriAxisSeries};

pub const DEFAULT_MAX_LAG_S: f64 = 0.5;

/// A tool- or handle-side recording: tri-axis (summed before comparison)
/// or already mono.
#[derive(Debug, Clone, PartialEq)]
pub enum Recording {
    Tri(TriAxisSeries),
    Mono(SampleBlock),
}

impl Recording {
    /// Mono view; tri-axis recordings are summed (F3).
    pub fn to_mono(&self) -> SampleBlock {
        match self {
            Recording::Tri(t) => axis_combine(t, CombineMode::F3),
            Recording::Mono(b) => b.clone(),
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            Recording::Tri(t) => t.rate(),
            Recording::Mono(b) => b.rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub channel: String,
    pub r: f64,
    pub lag_samples: i64,
    pub delay_s: f64,
}

impl FidelityReport {
    pub const CSV_HEADER: &'static str = "channel,r,lag_samples,delay_s";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{},{:.6}",
            self.channel, self.r, self.lag_samples, self.delay_s
        )
    }
}

fn centered(samples: &[f64]) -> Vec<f64> {
    let mean = samples.iter().sum::<f64>() / samples.len().max(1) as f64;
    samples.iter().map(|v| v - mean).collect()
}

/// FFT cross-correlator that keeps its plans between calls.
pub struct Correlator {
    planner: FftPlanner<f64>,
}

impl Default for Correlator {
    fn default() -> Self {
        Self::new()
    }
}

impl Correlator {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
        }
    }

    fn plans(&mut self, len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (self.planner.plan_fft_forward(len), self.planner.plan_fft_inverse(len))
    }

    /// Normalized cross-correlation `Σ a[n]·b[n+k] / sqrt(Σa²·Σb²)` of the
    /// mean-removed inputs for `k` in `[-max_lag, max_lag]`.
    pub fn xcorr(&mut self, a: &[f64], b: &[f64], max_lag: usize) -> Result<Vec<f64>> {
        let a = centered(a);
        let b = centered(b);
        let ea: f64 = a.iter().map(|v| v * v).sum();
        let eb: f64 = b.iter().map(|v| v * v).sum();
        if !(ea > 0.0 && eb > 0.0) {
            return Err(Error::Degenerate("constant (zero-variance) input".into()));
        }
        let size = (a.len() + b.len()).next_power_of_two();
        let (forward, inverse) = self.plans(size);
        let pad = |v: &[f64]| {
            let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            buf.resize(size, Complex64::new(0.0, 0.0));
            buf
        };
        let mut fa = pad(&a);
        let mut fb = pad(&b);
        forward.process(&mut fa);
        forward.process(&mut fb);
        let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
        inverse.process(&mut prod);
        let norm = 1.0 / (size as f64 * (ea * eb).sqrt());
        let lag_at = |k: i64| {
            let idx = if k >= 0 { k as usize } else { size - (-k) as usize };
            prod[idx].re * norm
        };
        Ok((-(max_lag as i64)..=max_lag as i64).map(lag_at).collect())
    }

    /// Lag (in samples) of the correlation peak; positive when `b` trails `a`.
    pub fn lag(&mut self, a: &SampleBlock, b: &SampleBlock, max_lag_s: f64) -> Result<i64> {
        if a.rate != b.rate {
            return Err(Error::Contract(format!("rates differ: {} Hz vs {} Hz", a.rate, b.rate)));
        }
        let max_lag = (max_lag_s * a.rate).round() as usize;
        let shortest = a.len().min(b.len());
        if max_lag >= shortest {
            return Err(Error::Contract(format!(
                "max lag {max_lag} samples not below shortest input ({shortest} samples)"
            )));
        }
        let c = self.xcorr(&a.samples, &b.samples, max_lag)?;
        let mut best = 0usize;
        for (i, &v) in c.iter().enumerate() {
            let closer = (i as i64 - max_lag as i64).abs() < (best as i64 - max_lag as i64).abs();
            if v > c[best] || (v == c[best] && closer) {
                best = i;
            }
        }
        Ok(best as i64 - max_lag as i64)
    }
}

pub fn xcorr_lag(a: &SampleBlock, b: &SampleBlock, max_lag_s: f64) -> Result<i64> {
    Correlator::new().lag(a, b, max_lag_s)
}

/// Pearson coefficient between `a[n]` and `b[n + lag]` over their overlap.
pub fn aligned_r(a: &[f64], b: &[f64], lag: i64) -> Result<f64> {
    let start = 0i64.max(-lag);
    let end = (a.len() as i64).min(b.len() as i64 - lag);
    if end - start < 2 {
        return Err(Error::Range(format!(
            "overlap of {} samples at lag {lag}",
            (end - start).max(0)
        )));
    }
    let xs = &a[start as usize..end as usize];
    let ys = &b[(start + lag) as usize..(end + lag) as usize];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::Degenerate("zero variance after alignment".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityOptions {
    pub max_lag_s: f64,
    pub channel: String,
}

impl Default for FidelityOptions {
    fn default() -> Self {
        Self {
            max_lag_s: DEFAULT_MAX_LAG_S,
            channel: "left".into(),
        }
    }
}

pub fn fidelity_report(tool: &Recording, handle: &Recording, options: &FidelityOptions) -> Result<FidelityReport> {
    let a = tool.to_mono();
    let b = handle.to_mono();
    let lag = xcorr_lag(&a, &b, options.max_lag_s)?;
    let r = aligned_r(&a.samples, &b.samples, lag)?;
    Ok(FidelityReport {
        channel: options.channel.clone(),
        r,
        lag_samples: lag,
        delay_s: lag as f64 / a.rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(seed: u64, len: usize, sigma: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sigma).unwrap();
        (0..len).map(|_| d.sample(&mut rng)).collect()
    }

    fn delayed(a: &[f64], shift: usize) -> Vec<f64> {
        let mut b = vec![0.0; a.len()];
        b[shift..].copy_from_slice(&a[..a.len() - shift]);
        b
    }

    fn block(v: Vec<f64>) -> SampleBlock {
        SampleBlock::new(v, 8000.0)
    }

    /// Direct O(N·L) correlation for cross-checking the FFT path.
    fn brute_xcorr(a: &[f64], b: &[f64], max_lag: i64) -> Vec<f64> {
        let a = centered(a);
        let b = centered(b);
        let ea: f64 = a.iter().map(|v| v * v).sum();
        let eb: f64 = b.iter().map(|v| v * v).sum();
        (-max_lag..=max_lag)
            .map(|k| {
                let mut s = 0.0;
                for n in 0..a.len() as i64 {
                    let m = n + k;
                    if m >= 0 && m < b.len() as i64 {
                        s += a[n as usize] * b[m as usize];
                    }
                }
                s / (ea * eb).sqrt()
            })
            .collect()
    }

    #[test]
    fn fft_xcorr_matches_direct_sum() {
        let a = gaussian(1, 300, 1.0);
        let b = gaussian(2, 250, 1.0);
        let fast = Correlator::new().xcorr(&a, &b, 40).unwrap();
        let slow = brute_xcorr(&a, &b, 40);
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-10);
        }
    }

    #[test]
    fn autocorrelation_peaks_at_zero() {
        let a = block(gaussian(3, 4000, 1.0));
        assert_eq!(xcorr_lag(&a, &a, 0.1).unwrap(), 0);
    }

    #[test]
    fn recovers_scaled_delay() {
        let a = gaussian(4, 8000, 1.0);
        let b: Vec<f64> = delayed(&a, 100).iter().map(|v| 0.5 * v).collect();
        assert_eq!(xcorr_lag(&block(a.clone()), &block(b.clone()), 0.5).unwrap(), 100);
        // reversed roles give the negative lag
        assert_eq!(xcorr_lag(&block(b), &block(a), 0.5).unwrap(), -100);
    }

    #[test]
    fn noisy_delay_within_one_sample_over_100_seeds() {
        let mut correlator = Correlator::new();
        for seed in 0..100 {
            let a = gaussian(1000 + seed, 8000, 1.0);
            // 10 dB SNR: noise power one tenth of the signal power
            let noise = gaussian(5000 + seed, 8000, (0.1f64).sqrt());
            let b: Vec<f64> = delayed(&a, 100).iter().zip(&noise).map(|(s, n)| s + n).collect();
            let lag = correlator.lag(&block(a), &block(b), 0.5).unwrap();
            assert!((lag - 100).abs() <= 1, "seed {seed}: lag {lag}");
        }
    }

    #[test]
    fn constant_input_is_degenerate() {
        let a = block(vec![2.0; 1000]);
        let b = block(gaussian(5, 1000, 1.0));
        assert!(matches!(xcorr_lag(&a, &b, 0.01), Err(Error::Degenerate(_))));
    }

    #[test]
    fn max_lag_must_fit_inside_inputs() {
        let a = block(gaussian(5, 100, 1.0));
        assert!(matches!(xcorr_lag(&a, &a, 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn pearson_affine_and_negation() {
        let a = gaussian(6, 1000, 1.0);
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!((aligned_r(&a, &b, 0).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((aligned_r(&a, &neg, 0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn independent_noise_is_uncorrelated() {
        let a = gaussian(7, 100_000, 1.0);
        let b = gaussian(8, 100_000, 1.0);
        assert!(aligned_r(&a, &b, 0).unwrap().abs() < 0.02);
    }

    #[test]
    fn aligned_r_requires_overlap_and_variance() {
        let a = gaussian(9, 10, 1.0);
        assert!(matches!(aligned_r(&a, &a, 9), Err(Error::Range(_))));
        assert!(matches!(aligned_r(&a, &[1.0; 10], 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn report_of_identical_signal() {
        let x = Recording::Mono(block(gaussian(10, 6000, 1.0)));
        let rep = fidelity_report(&x, &x, &FidelityOptions::default()).unwrap();
        assert!((rep.r - 1.0).abs() < 1e-12);
        assert_eq!(rep.lag_samples, 0);
        assert_eq!(rep.delay_s, 0.0);
    }

    #[test]
    fn report_of_silent_handle_is_an_error() {
        let x = Recording::Mono(block(gaussian(11, 6000, 1.0)));
        let z = Recording::Mono(block(vec![0.0; 6000]));
        assert!(fidelity_report(&x, &z, &FidelityOptions::default()).is_err());
    }

    #[test]
    fn lag_invariant_under_positive_scaling() {
        let a = gaussian(12, 5000, 1.0);
        let b = delayed(&a, 37);
        let base = xcorr_lag(&block(a.clone()), &block(b.clone()), 0.1).unwrap();
        for k in [1e-3, 0.5, 7.0, 1e4] {
            let bk: Vec<f64> = b.iter().map(|v| v * k).collect();
            let ak: Vec<f64> = a.iter().map(|v| v * k).collect();
            assert_eq!(xcorr_lag(&block(a.clone()), &block(bk), 0.1).unwrap(), base);
            assert_eq!(xcorr_lag(&block(ak), &block(b.clone()), 0.1).unwrap(), base);
        }
    }
}
