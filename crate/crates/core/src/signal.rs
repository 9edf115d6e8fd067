//! Sampled-signal value types shared by every other module.
//!
//! Units are carried by context rather than by the type system: acceleration
//! in m/s², force in N, gain in dB, frequency in Hz and energy in unit²·s.
//! [`SignalKind`] records which physical quantity a tri-axis series holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default internal processing rate of the engine, in Hz.
pub const DEFAULT_RATE: f64 = 8000.0;

/// A run of mono samples at a fixed rate, positioned in its stream by
/// `start_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub samples: Vec<f64>,
    pub rate: f64,
    pub start_index: u64,
}

impl SampleBlock {
    pub fn new(samples: Vec<f64>, rate: f64) -> Self {
        Self::at(samples, rate, 0)
    }

    pub fn at(samples: Vec<f64>, rate: f64, start_index: u64) -> Self {
        assert!(rate > 0.0, "sample rate must be positive");
        Self {
            samples,
            rate,
            start_index,
        }
    }

    pub fn zeros(len: usize, rate: f64) -> Self {
        Self::new(vec![0.0; len], rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    #[default]
    Acceleration,
    Force,
    Drive,
}

/// Three equal-length axes sampled together.
#[derive(Debug, Clone, PartialEq)]
pub struct TriAxisSeries {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    rate: f64,
    kind: SignalKind,
}

impl TriAxisSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>, rate: f64, kind: SignalKind) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Contract(format!("sample rate must be positive, got {rate}")));
        }
        if x.len() != y.len() || x.len() != z.len() {
            return Err(Error::Contract(format!(
                "axis lengths differ: x={} y={} z={}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(Self { x, y, z, rate, kind })
    }

    pub fn zeros(len: usize, rate: f64, kind: SignalKind) -> Self {
        Self::new(vec![0.0; len], vec![0.0; len], vec![0.0; len], rate, kind).expect("zeros are well formed")
    }

    /// Builds a series by evaluating `f(n)` for each sample index.
    pub fn from_fn(len: usize, rate: f64, kind: SignalKind, mut f: impl FnMut(usize) -> [f64; 3]) -> Self {
        let mut out = Self::zeros(len, rate, kind);
        for n in 0..len {
            let [a, b, c] = f(n);
            out.x[n] = a;
            out.y[n] = b;
            out.z[n] = c;
        }
        out
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn axes(&self) -> [&[f64]; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn axes_mut(&mut self) -> [&mut Vec<f64>; 3] {
        [&mut self.x, &mut self.y, &mut self.z]
    }

    pub fn into_axes(self) -> [Vec<f64>; 3] {
        [self.x, self.y, self.z]
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.rate
    }

    pub fn sample(&self, n: usize) -> [f64; 3] {
        [self.x[n], self.y[n], self.z[n]]
    }

    /// Returns the samples in `[t0, t1)` seconds. Window edges are rounded
    /// to the nearest sample so adjacent slices tile exactly.
    pub fn slice(&self, t0: f64, t1: f64) -> Result<TriAxisSeries> {
        let duration = self.duration();
        if !(t0 >= 0.0 && t0 < t1 && t1 <= duration + 0.5 / self.rate) {
            return Err(Error::Range(format!("window [{t0}, {t1}) outside [0, {duration}]")));
        }
        let start = (t0 * self.rate).round() as usize;
        let end = ((t1 * self.rate).round() as usize).min(self.len());
        Ok(self.slice_samples(start, end))
    }

    /// Sample-index variant of [`slice`](Self::slice); clamps `end` to the length.
    pub fn slice_samples(&self, start: usize, end: usize) -> TriAxisSeries {
        let end = end.min(self.len());
        let start = start.min(end);
        Self {
            x: self.x[start..end].to_vec(),
            y: self.y[start..end].to_vec(),
            z: self.z[start..end].to_vec(),
            rate: self.rate,
            kind: self.kind,
        }
    }

    /// Appends `other` after `self`.
    pub fn concat(&self, other: &TriAxisSeries) -> Result<TriAxisSeries> {
        if self.rate != other.rate {
            return Err(Error::Contract(format!(
                "cannot join series at {} Hz and {} Hz",
                self.rate, other.rate
            )));
        }
        let join = |a: &[f64], b: &[f64]| [a, b].concat();
        Ok(Self {
            x: join(&self.x, &other.x),
            y: join(&self.y, &other.y),
            z: join(&self.z, &other.z),
            rate: self.rate,
            kind: self.kind,
        })
    }

    /// Per-sample Euclidean norm `sqrt(x² + y² + z²)`.
    pub fn magnitude(&self) -> SampleBlock {
        let samples = (0..self.len())
            .map(|n| (self.x[n] * self.x[n] + self.y[n] * self.y[n] + self.z[n] * self.z[n]).sqrt())
            .collect();
        SampleBlock::new(samples, self.rate)
    }

    pub fn scaled(&self, k: f64) -> TriAxisSeries {
        self.map(|v| v * k)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TriAxisSeries {
        Self {
            x: self.x.iter().copied().map(&f).collect(),
            y: self.y.iter().copied().map(&f).collect(),
            z: self.z.iter().copied().map(&f).collect(),
            rate: self.rate,
            kind: self.kind,
        }
    }

    /// Applies a 3×3 matrix to every sample vector (`out = m · [x y z]ᵀ`).
    pub fn transformed(&self, m: &[[f64; 3]; 3]) -> TriAxisSeries {
        Self::from_fn(self.len(), self.rate, self.kind, |n| {
            let v = self.sample(n);
            let row = |r: &[f64; 3]| r[0] * v[0] + r[1] * v[1] + r[2] * v[2];
            [row(&m[0]), row(&m[1]), row(&m[2])]
        })
    }

    /// Sample-wise sum; the shorter series is treated as zero-padded.
    pub fn add(&self, other: &TriAxisSeries) -> Result<TriAxisSeries> {
        if self.rate != other.rate {
            return Err(Error::Contract(format!(
                "cannot add series at {} Hz and {} Hz",
                self.rate, other.rate
            )));
        }
        let mut out = if self.len() >= other.len() {
            self.clone()
        } else {
            other.clone()
        };
        let shorter = if self.len() >= other.len() { other } else { self };
        for (dst, src) in out.axes_mut().into_iter().zip(shorter.axes()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(out)
    }

    /// Adds `other` into `self` starting at sample `offset`, growing nothing:
    /// samples that would land past the end are dropped.
    pub fn add_at(&mut self, other: &TriAxisSeries, offset: usize) {
        let len = self.len();
        for (dst, src) in self.axes_mut().into_iter().zip(other.axes()) {
            for (k, s) in src.iter().enumerate() {
                let n = offset + k;
                if n >= len {
                    break;
                }
                dst[n] += s;
            }
        }
    }
}
