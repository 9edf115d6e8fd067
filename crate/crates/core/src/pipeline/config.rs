//! Pipeline configuration as read from JSON (`docs/pipeline.schema.json`).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{Command, ControlMessage};
use crate::dsp::ChannelStrip;
use crate::error::{Error, Result};
use crate::signal::{TriAxisSeries, DEFAULT_RATE};
use crate::synth::ScenarioScript;

pub const DEFAULT_BLOCK_SIZE: usize = 64;
pub const MIN_BLOCK_SIZE: usize = 16;
pub const MAX_BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptRef {
    Path(PathBuf),
    Inline(Box<ScenarioScript>),
}

/// Where a channel's tri-axis input comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceBinding {
    /// A WAV file (lanes pick x, y, z), an `x,y,z` CSV, or a recorded
    /// session directory (uses the raw stream of `tool`).
    File {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lanes: Option<[usize; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tool: Option<String>,
    },
    /// A rendered scenario script; `tool` defaults to the channel id.
    Synth {
        script: ScriptRef,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tool: Option<String>,
    },
    /// Live frames from `address` carrying tool id `tool`.
    Network { address: String, tool: u8 },
    #[serde(skip)]
    Memory(Arc<TriAxisSeries>),
}

impl PartialEq for SourceBinding {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::Memory(a), Self::Memory(b)) => Arc::ptr_eq(a, b) || a == b,
            (
                Self::File {
                    path: p,
                    lanes: l,
                    tool: t,
                },
                Self::File {
                    path: q,
                    lanes: m,
                    tool: u,
                },
            ) => p == q && l == m && t == u,
            (Self::Synth { script: a, tool: t }, Self::Synth { script: b, tool: u }) => a == b && t == u,
            (Self::Network { address: a, tool: t }, Self::Network { address: b, tool: u }) => a == b && t == u,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub id: String,
    pub source: SourceBinding,
    #[serde(default)]
    pub strip: ChannelStrip,
    pub sink_lane: usize,
}

/// A control message applied at the first block boundary at or after `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledControl {
    pub t: f64,
    pub message: ControlMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default = "default_block_size")]
    pub block_size: usize,
    pub channels: Vec<ChannelConfig>,
    /// Offline runs record here; live `start_record` without a path
    /// creates numbered sessions under it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<ScheduledControl>,
}

fn default_rate() -> f64 {
    DEFAULT_RATE
}

fn default_block_size() -> usize {
    DEFAULT_BLOCK_SIZE
}

impl PipelineConfig {
    pub fn new(channels: Vec<ChannelConfig>) -> Self {
        Self {
            rate: DEFAULT_RATE,
            block_size: DEFAULT_BLOCK_SIZE,
            channels,
            record_path: None,
            schedule: Vec::new(),
        }
    }

    /// Left tool on lane 0 and right tool on lane 1, default strips.
    pub fn two_tools(left: SourceBinding, right: SourceBinding) -> Self {
        Self::new(vec![
            ChannelConfig {
                id: "left".into(),
                source: left,
                strip: ChannelStrip::default(),
                sink_lane: 0,
            },
            ChannelConfig {
                id: "right".into(),
                source: right,
                strip: ChannelStrip::default(),
                sink_lane: 1,
            },
        ])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file; relative source and record paths resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::schema(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for ch in &mut self.channels {
            match &mut ch.source {
                SourceBinding::File { path, .. } => fix(path),
                SourceBinding::Synth {
                    script: ScriptRef::Path(path),
                    ..
                } => fix(path),
                _ => {}
            }
        }
        if let Some(p) = self.record_path.as_mut() {
            fix(p);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::Config(format!("rate must be positive, got {}", self.rate)));
        }
        if !(MIN_BLOCK_SIZE..=MAX_BLOCK_SIZE).contains(&self.block_size) || !self.block_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "block_size must be a power of two in [{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {}",
                self.block_size
            )));
        }
        if self.channels.is_empty() {
            return Err(Error::Config("no channels configured".into()));
        }
        let mut ids = HashSet::new();
        let mut lanes = HashSet::new();
        let mut net = HashSet::new();
        for ch in &self.channels {
            if ch.id.is_empty() {
                return Err(Error::Config("channel id must not be empty".into()));
            }
            if !ids.insert(ch.id.as_str()) {
                return Err(Error::Config(format!("duplicate channel id {:?}", ch.id)));
            }
            if !lanes.insert(ch.sink_lane) {
                return Err(Error::Config(format!("duplicate sink lane {}", ch.sink_lane)));
            }
            if let SourceBinding::Network { address, tool } = &ch.source {
                if !net.insert((address.as_str(), *tool)) {
                    return Err(Error::Config(format!("tool {tool} at {address} bound twice")));
                }
            }
            ch.strip
                .validate(self.rate)
                .map_err(|e| Error::Config(format!("channel {}: {e}", ch.id)))?;
        }
        for s in &self.schedule {
            if !(s.t >= 0.0 && s.t.is_finite()) {
                return Err(Error::Config(format!("scheduled message at invalid time {}", s.t)));
            }
            Command::from_message(&s.message, self.rate)
                .map_err(|e| Error::Config(format!("scheduled {} at {} s: {e}", s.message.op, s.t)))?;
            if let Some(ch) = &s.message.channel {
                if !ids.contains(ch.as_str()) {
                    return Err(Error::Config(format!("scheduled message names unknown channel {ch:?}")));
                }
            } else if s.message.op.needs_channel() {
                return Err(Error::Config(format!("scheduled {} needs a channel", s.message.op)));
            }
        }
        Ok(())
    }
}
