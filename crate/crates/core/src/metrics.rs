//! Trial metrics: noise-gated RMS and zero-crossing rate of the tool
//! acceleration and baseplate force streams.

use serde::{Deserialize, Serialize};

use crate::dsp::{axis_combine, CombineMode};
use crate::session::Session;
use crate::signal::SampleBlock;

/// Default acceleration gate, m/s².
pub const ACCEL_THRESHOLD: f64 = 0.3;
/// Default force-magnitude gate, N.
pub const FORCE_THRESHOLD: f64 = 0.2;

/// Zeroes every sample with `|v| < threshold`.
pub fn gate(block: &SampleBlock, threshold: f64) -> SampleBlock {
    SampleBlock::at(gate_samples(&block.samples, threshold), block.rate, block.start_index)
}

pub fn gate_samples(samples: &[f64], threshold: f64) -> Vec<f64> {
    samples
        .iter()
        .map(|&v| if v.abs() < threshold { 0.0 } else { v })
        .collect()
}

/// Number of sign changes between consecutive non-zero samples.
/// Zero-valued runs are skipped: `+, 0, 0, −` is one crossing.
pub fn zero_crossings(samples: &[f64]) -> usize {
    let mut last_positive: Option<bool> = None;
    let mut count = 0;
    for &v in samples {
        if v == 0.0 || v.is_nan() {
            continue;
        }
        let positive = v > 0.0;
        if last_positive.is_some_and(|p| p != positive) {
            count += 1;
        }
        last_positive = Some(positive);
    }
    count
}

/// Zero crossings per second.
pub fn zcr(block: &SampleBlock) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    zero_crossings(&block.samples) as f64 / block.duration()
}

fn rms_or_zero(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        0.0
    } else {
        (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt()
    }
}

/// Which acceleration signal is gated and measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccelStream {
    /// x + y + z per tool, the signal that drives the actuator in F3.
    #[default]
    Summed,
    /// Each axis gated separately; RMS over all three, ZCR averaged.
    PerAxis,
}

/// How the force ZCR is taken. The gated force magnitude is non-negative,
/// so its raw ZCR is always zero; by default crossings are counted about
/// the mean of the gated magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForceZcr {
    #[default]
    MeanRemoved,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub accel_threshold: f64,
    pub force_threshold: f64,
    #[serde(default)]
    pub accel_stream: AccelStream,
    #[serde(default)]
    pub force_zcr: ForceZcr,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            accel_threshold: ACCEL_THRESHOLD,
            force_threshold: FORCE_THRESHOLD,
            accel_stream: AccelStream::Summed,
            force_zcr: ForceZcr::MeanRemoved,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolMetrics {
    pub tool: String,
    /// m/s²
    pub accel_rms: f64,
    /// Hz
    pub accel_zcr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub tools: Vec<ToolMetrics>,
    /// N
    pub force_rms: Option<f64>,
    /// Hz
    pub force_zcr: Option<f64>,
    pub completion_time: f64,
    pub thresholds: TrialOptions,
    /// Streams that were expected but absent.
    pub omissions: Vec<String>,
}

impl TrialMetrics {
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["trial".to_string(), "completion_time_s".to_string()];
        for t in &self.tools {
            cols.push(format!("{}_accel_rms", t.tool));
            cols.push(format!("{}_accel_zcr", t.tool));
        }
        cols.extend(["force_rms", "force_zcr", "accel_threshold", "force_threshold"].map(String::from));
        cols.join(",")
    }

    pub fn csv_row(&self, trial: &str) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        let mut cols = vec![trial.to_string(), format!("{:.6}", self.completion_time)];
        for t in &self.tools {
            cols.push(format!("{:.6}", t.accel_rms));
            cols.push(format!("{:.6}", t.accel_zcr));
        }
        cols.push(opt(self.force_rms));
        cols.push(opt(self.force_zcr));
        cols.push(format!("{}", self.thresholds.accel_threshold));
        cols.push(format!("{}", self.thresholds.force_threshold));
        cols.join(",")
    }
}

/// Gated RMS and ZCR for every tool's acceleration and the baseplate force.
pub fn trial_report(session: &Session, options: &TrialOptions) -> TrialMetrics {
    let mut omissions = Vec::new();
    let mut tools = Vec::new();
    for tool in &session.tools {
        let Some(raw) = &tool.raw else {
            omissions.push(format!("{}: raw acceleration", tool.id));
            continue;
        };
        let (accel_rms, accel_zcr) = match options.accel_stream {
            AccelStream::Summed => {
                let summed = axis_combine(raw, CombineMode::F3);
                let gated = gate(&summed, options.accel_threshold);
                (rms_or_zero(&gated.samples), zcr(&gated))
            }
            AccelStream::PerAxis => {
                let gated: Vec<Vec<f64>> = raw
                    .axes()
                    .iter()
                    .map(|a| gate_samples(a, options.accel_threshold))
                    .collect();
                let n = raw.len();
                let sq: f64 = gated.iter().flatten().map(|v| v * v).sum();
                let rms = if n == 0 { 0.0 } else { (sq / n as f64).sqrt() };
                let zcr_mean = gated
                    .into_iter()
                    .map(|g| zcr(&SampleBlock::new(g, raw.rate())))
                    .sum::<f64>()
                    / 3.0;
                (rms, zcr_mean)
            }
        };
        tools.push(ToolMetrics {
            tool: tool.id.clone(),
            accel_rms,
            accel_zcr,
        });
    }
    if session.tools.is_empty() {
        omissions.push("tool acceleration".into());
    }

    let (force_rms, force_zcr) = match &session.force {
        Some(force) => {
            let gated = gate(&force.magnitude(), options.force_threshold);
            let rms = rms_or_zero(&gated.samples);
            let zcr_value = match options.force_zcr {
                ForceZcr::Raw => zcr(&gated),
                ForceZcr::MeanRemoved => {
                    let mean = gated.samples.iter().sum::<f64>() / gated.len().max(1) as f64;
                    let centered = gated.samples.iter().map(|v| v - mean).collect();
                    zcr(&SampleBlock::new(centered, gated.rate))
                }
            };
            (Some(rms), Some(zcr_value))
        }
        None => {
            omissions.push("force".into());
            (None, None)
        }
    };

    TrialMetrics {
        tools,
        force_rms,
        force_zcr,
        completion_time: session.completion_time(),
        thresholds: *options,
        omissions,
    }
}
