//! Control-surface messages: live parameter changes, their acks and the
//! telemetry frames sent back to consoles.
//!
//! Wire format is JSON; the schema lives in `docs/control.schema.json`.
//!
//! ```json
//! {"id": 7, "op": "set_gain", "channel": "left", "value": 4}
//! {"type": "ack", "id": 7, "op": "set_gain", "channel": "left", "value": 4.0, "clamped": false}
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dsp::{clamp_gain_db, CombineMode, FilterSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    SetGain,
    SetMode,
    SetFilter,
    Mute,
    StartRecord,
    StopRecord,
    SubscribeLevels,
}

impl Op {
    pub fn as_str(self) -> &'static str {
        match self {
            Op::SetGain => "set_gain",
            Op::SetMode => "set_mode",
            Op::SetFilter => "set_filter",
            Op::Mute => "mute",
            Op::StartRecord => "start_record",
            Op::StopRecord => "stop_record",
            Op::SubscribeLevels => "subscribe_levels",
        }
    }

    /// Whether the op addresses one channel strip.
    pub fn needs_channel(self) -> bool {
        matches!(self, Op::SetGain | Op::SetMode | Op::SetFilter | Op::Mute)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A request from a control client. `id` is echoed verbatim in the reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<Value>,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

impl ControlMessage {
    pub fn new(op: Op, channel: Option<&str>, value: Option<Value>) -> Self {
        Self {
            id: None,
            op,
            channel: channel.map(str::to_string),
            value,
        }
    }

    pub fn with_id(mut self, id: impl Into<Value>) -> Self {
        self.id = Some(id.into());
        self
    }

    pub fn set_gain(channel: &str, db: f64) -> Self {
        Self::new(Op::SetGain, Some(channel), Some(db.into()))
    }

    pub fn set_mode(channel: &str, mode: CombineMode) -> Self {
        Self::new(Op::SetMode, Some(channel), Some(mode.as_str().into()))
    }

    pub fn set_filter(channel: &str, spec: Option<FilterSpec>) -> Self {
        let value = spec.map(|s| serde_json::to_value(s).expect("filter spec serializes"));
        Self::new(Op::SetFilter, Some(channel), Some(value.unwrap_or(Value::Null)))
    }

    pub fn mute(channel: &str, muted: bool) -> Self {
        Self::new(Op::Mute, Some(channel), Some(muted.into()))
    }

    /// Parses one wire message; the error text is suitable for an error frame.
    pub fn parse(text: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
        serde_json::from_value(value).map_err(|e| format!("schema violation: {e}"))
    }

    /// Best-effort id extraction from a message that failed to parse.
    pub fn salvage_id(text: &str) -> Option<Value> {
        serde_json::from_str::<Value>(text).ok()?.get("id").cloned()
    }
}

/// A validated, range-checked request.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetGain { requested: f64, applied: f64 },
    SetMode(CombineMode),
    SetFilter(Option<FilterSpec>),
    Mute(bool),
    StartRecord(Option<PathBuf>),
    StopRecord,
    SubscribeLevels(bool),
}

impl Command {
    /// Checks `msg.value` against the op's domain at `rate`.
    pub fn from_message(msg: &ControlMessage, rate: f64) -> Result<Self, String> {
        let value = msg.value.as_ref().filter(|v| !v.is_null());
        match msg.op {
            Op::SetGain => {
                let db = value
                    .and_then(Value::as_f64)
                    .ok_or("set_gain needs a numeric value in dB")?;
                if !db.is_finite() {
                    return Err("gain must be finite".into());
                }
                Ok(Command::SetGain {
                    requested: db,
                    applied: clamp_gain_db(db).applied_db,
                })
            }
            Op::SetMode => {
                let s = value
                    .and_then(Value::as_str)
                    .ok_or("set_mode needs \"F0\", \"F1\" or \"F3\"")?;
                s.parse().map(Command::SetMode).map_err(|e: crate::Error| e.to_string())
            }
            Op::SetFilter => match value {
                None => Ok(Command::SetFilter(None)),
                Some(v) => {
                    let spec: FilterSpec =
                        serde_json::from_value(v.clone()).map_err(|e| format!("bad filter spec: {e}"))?;
                    spec.validate(rate).map_err(|e| e.to_string())?;
                    Ok(Command::SetFilter(Some(spec)))
                }
            },
            Op::Mute => match value {
                None => Ok(Command::Mute(true)),
                Some(Value::Bool(b)) => Ok(Command::Mute(*b)),
                Some(v) => match v.as_f64() {
                    Some(n) if n == 0.0 || n == 1.0 => Ok(Command::Mute(n == 1.0)),
                    _ => Err("mute needs a boolean value".into()),
                },
            },
            Op::StartRecord => match value {
                None => Ok(Command::StartRecord(None)),
                Some(Value::String(p)) if !p.is_empty() => Ok(Command::StartRecord(Some(PathBuf::from(p)))),
                Some(_) => Err("start_record value must be a directory path".into()),
            },
            Op::StopRecord => Ok(Command::StopRecord),
            Op::SubscribeLevels => match value {
                None => Ok(Command::SubscribeLevels(true)),
                Some(Value::Bool(b)) => Ok(Command::SubscribeLevels(*b)),
                Some(_) => Err("subscribe_levels value must be a boolean".into()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(rename = "type")]
    pub kind: String,
    pub id: Option<Value>,
    pub op: Op,
    pub channel: Option<String>,
    /// The value in effect after range enforcement.
    pub value: Value,
    pub clamped: bool,
}

impl Ack {
    pub fn new(msg: &ControlMessage, value: Value, clamped: bool) -> Self {
        Self {
            kind: "ack".into(),
            id: msg.id.clone(),
            op: msg.op,
            channel: msg.channel.clone(),
            value,
            clamped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    #[serde(rename = "type")]
    pub kind: String,
    pub id: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<Op>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    pub error: String,
}

impl ErrorReply {
    pub fn new(id: Option<Value>, op: Option<Op>, channel: Option<String>, error: impl Into<String>) -> Self {
        Self {
            kind: "error".into(),
            id,
            op,
            channel,
            error: error.into(),
        }
    }

    pub fn for_message(msg: &ControlMessage, error: impl Into<String>) -> Self {
        Self::new(msg.id.clone(), Some(msg.op), msg.channel.clone(), error)
    }
}

impl fmt::Display for ErrorReply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.error)
    }
}

impl std::error::Error for ErrorReply {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelLevels {
    pub id: String,
    /// Post-filter, pre-gain RMS.
    pub pre: f64,
    /// Post-gain RMS (actuator drive).
    pub post: f64,
    pub mode: CombineMode,
    pub gain_db: f64,
    pub muted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    #[serde(rename = "type")]
    pub kind: String,
    pub seq: u64,
    /// Seconds since the service started.
    pub t: f64,
    /// Stream position the levels refer to.
    pub sample_index: u64,
    pub channels: Vec<ChannelLevels>,
}

impl TelemetryFrame {
    pub fn new(seq: u64, t: f64, sample_index: u64, channels: Vec<ChannelLevels>) -> Self {
        Self {
            kind: "telemetry".into(),
            seq,
            t,
            sample_index,
            channels,
        }
    }
}
