use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::signal::{SampleBlock, TriAxisSeries};

/// How a tool's three axes become one drive signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum CombineMode {
    /// No feedback: output is silent.
    F0,
    /// The x-axis alone (aligned with the tool shaft).
    F1,
    /// Time-domain sum x + y + z, no normalization.
    #[default]
    F3,
}

impl CombineMode {
    #[inline]
    pub fn combine(self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            CombineMode::F0 => 0.0,
            CombineMode::F1 => x,
            CombineMode::F3 => x + y + z,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CombineMode::F0 => "F0",
            CombineMode::F1 => "F1",
            CombineMode::F3 => "F3",
        }
    }
}

impl fmt::Display for CombineMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombineMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F0" => Ok(CombineMode::F0),
            "F1" => Ok(CombineMode::F1),
            "F3" => Ok(CombineMode::F3),
            other => Err(Error::Config(format!("unknown combine mode {other:?}"))),
        }
    }
}

pub fn axis_combine(tri: &TriAxisSeries, mode: CombineMode) -> SampleBlock {
    let samples = match mode {
        CombineMode::F0 => vec![0.0; tri.len()],
        CombineMode::F1 => tri.x().to_vec(),
        CombineMode::F3 => (0..tri.len()).map(|n| tri.x()[n] + tri.y()[n] + tri.z()[n]).collect(),
    };
    SampleBlock::new(samples, tri.rate())
}
