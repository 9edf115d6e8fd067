//! In-memory form of a recorded session and its processing log.

use serde::{Deserialize, Serialize};

use crate::signal::{SampleBlock, TriAxisSeries};

/// Marker names that bound a trial for completion-time accounting.
pub const MARKER_START: &str = "start";
pub const MARKER_END: &str = "end";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub name: String,
    pub sample_index: u64,
}

/// One applied parameter change, stamped with the first sample it affected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamChange {
    pub sample_index: u64,
    pub channel: String,
    pub op: String,
    pub requested: String,
    pub applied: String,
    pub client: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Underrun {
    pub channel: String,
    pub sample_index: u64,
    pub missing: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub rate: f64,
    pub block_size: usize,
    pub blocks: u64,
    pub samples: u64,
    pub deadline_misses: u64,
    pub underruns: Vec<Underrun>,
    pub params: Vec<ParamChange>,
    pub markers: Vec<Marker>,
}

impl SessionLog {
    pub fn params_csv(&self) -> String {
        let mut out = String::from("sample_index,time_s,channel,op,requested,applied,client\n");
        for p in &self.params {
            out.push_str(&format!(
                "{},{:.6},{},{},{},{},{}\n",
                p.sample_index,
                p.sample_index as f64 / self.rate,
                p.channel,
                p.op,
                csv_field(&p.requested),
                csv_field(&p.applied),
                csv_field(&p.client)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Per-tool streams of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolRecording {
    pub id: String,
    /// Raw tri-axis acceleration as sensed.
    pub raw: Option<TriAxisSeries>,
    /// Post-chain actuator drive.
    pub post: Option<SampleBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub rate: f64,
    pub tools: Vec<ToolRecording>,
    /// Baseplate force (N), possibly at its own rate.
    pub force: Option<TriAxisSeries>,
    pub log: SessionLog,
}

impl Session {
    pub fn tool(&self, id: &str) -> Option<&ToolRecording> {
        self.tools.iter().find(|t| t.id == id)
    }

    fn marker(&self, name: &str) -> Option<u64> {
        self.log.markers.iter().find(|m| m.name == name).map(|m| m.sample_index)
    }

    /// Seconds between the start and end markers, or the length of the
    /// longest stream when markers are absent.
    pub fn completion_time(&self) -> f64 {
        if let (Some(a), Some(b)) = (self.marker(MARKER_START), self.marker(MARKER_END)) {
            if b >= a {
                return (b - a) as f64 / self.rate;
            }
        }
        let tool_len = self
            .tools
            .iter()
            .filter_map(|t| {
                t.raw
                    .as_ref()
                    .map(|r| r.duration())
                    .or(t.post.as_ref().map(|p| p.duration()))
            })
            .fold(0.0, f64::max);
        let force_len = self.force.as_ref().map_or(0.0, |f| f.duration());
        tool_len.max(force_len)
    }
}
