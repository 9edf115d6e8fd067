//! Thread-safe control surface of a pipeline: validated parameter changes
//! go through a bounded mailbox, levels and counters come back through
//! shared state.

use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_channel::{Sender, TrySendError};
use parking_lot::Mutex;
use serde::Serialize;
use serde_json::Value;

use super::LatencyReport;
use crate::control::{Ack, ChannelLevels, Command, ControlMessage, ErrorReply, Op};
use crate::dsp::{ChannelStrip, CombineMode, FilterSpec};

pub const MAILBOX_CAPACITY: usize = 256;

/// A validated change on its way to the processing thread.
#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    pub channel: Option<usize>,
    pub command: Command,
    pub op: Op,
    pub requested: String,
    pub applied: String,
    pub client: String,
}

#[derive(Debug, Clone)]
pub(crate) struct LiveChannel {
    pub id: String,
    pub sink_lane: usize,
    pub strip: ChannelStrip,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Default)]
pub(crate) struct LiveState {
    pub channels: Vec<LiveChannel>,
    pub recording: Option<PathBuf>,
    pub last_recording: Option<std::result::Result<PathBuf, String>>,
}

#[derive(Debug, Default)]
pub(crate) struct Counters {
    pub blocks: AtomicU64,
    pub sample_index: AtomicU64,
    pub deadline_misses: AtomicU64,
    pub underruns: AtomicU64,
    pub clamped: AtomicU64,
}

pub(crate) struct Shared {
    pub rate: f64,
    pub block_size: usize,
    pub latency: LatencyReport,
    pub record_root: Option<PathBuf>,
    pub tx: Sender<Envelope>,
    pub state: Mutex<LiveState>,
    pub counters: Counters,
    pub running: AtomicBool,
    pub stop: AtomicBool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelStatus {
    pub id: String,
    pub sink_lane: usize,
    pub mode: CombineMode,
    pub gain_db: f64,
    pub muted: bool,
    pub filter: Option<FilterSpec>,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineStatus {
    pub rate: f64,
    pub block_size: usize,
    pub latency_s: f64,
    pub running: bool,
    pub blocks: u64,
    pub sample_index: u64,
    pub deadline_misses: u64,
    pub underruns: u64,
    pub recording: bool,
    pub session_path: Option<String>,
    /// Number of acked commands whose value was range-limited.
    pub clamp_count: u64,
    pub channels: Vec<ChannelStatus>,
}

/// Cheap to clone; every clone talks to the same pipeline.
#[derive(Clone)]
pub struct ControlHandle {
    pub(crate) shared: Arc<Shared>,
}

impl ControlHandle {
    pub fn rate(&self) -> f64 {
        self.shared.rate
    }

    pub fn block_size(&self) -> usize {
        self.shared.block_size
    }

    pub fn latency(&self) -> LatencyReport {
        self.shared.latency
    }

    pub fn channel_ids(&self) -> Vec<String> {
        self.shared.state.lock().channels.iter().map(|c| c.id.clone()).collect()
    }

    /// Asks a running pipeline to finish after the current block.
    pub fn stop(&self) {
        self.shared.stop.store(true, Ordering::SeqCst);
    }

    pub fn is_running(&self) -> bool {
        self.shared.running.load(Ordering::SeqCst)
    }

    pub fn deadline_misses(&self) -> u64 {
        self.shared.counters.deadline_misses.load(Ordering::Relaxed)
    }

    /// Validates `msg`, queues it for the next block boundary and returns
    /// the ack with the value that will be in effect. `client` is recorded
    /// in the session log.
    pub fn apply(&self, msg: &ControlMessage, client: &str) -> Result<Ack, ErrorReply> {
        let fail = |e: &str| ErrorReply::for_message(msg, e);
        let command = Command::from_message(msg, self.shared.rate).map_err(|e| fail(&e))?;

        let mut state = self.shared.state.lock();
        let channel = match (&msg.channel, msg.op.needs_channel()) {
            (Some(id), true) => Some(
                state
                    .channels
                    .iter()
                    .position(|c| &c.id == id)
                    .ok_or_else(|| fail(&format!("unknown channel {id:?}")))?,
            ),
            (None, true) => return Err(fail(&format!("{} needs a channel", msg.op))),
            (_, false) => None,
        };

        let requested = msg
            .value
            .as_ref()
            .map(Value::to_string)
            .unwrap_or_else(|| "null".into());
        let (value, clamped, command) = match command {
            Command::SetGain { requested, applied } => (
                Value::from(applied),
                applied != requested,
                Command::SetGain { requested, applied },
            ),
            Command::SetMode(m) => (Value::from(m.as_str()), false, command),
            Command::SetFilter(spec) => (serde_json::to_value(spec).unwrap_or(Value::Null), false, command),
            Command::Mute(m) => (Value::from(m), false, command),
            Command::SubscribeLevels(on) => return Ok(Ack::new(msg, Value::from(on), false)),
            Command::StartRecord(path) => {
                if let Some(active) = &state.recording {
                    return Err(fail(&format!("already recording to {}", active.display())));
                }
                let path = match path.or_else(|| self.next_session_dir()) {
                    Some(p) => p,
                    None => return Err(fail("no recording directory given or configured")),
                };
                (
                    Value::from(path.display().to_string()),
                    false,
                    Command::StartRecord(Some(path)),
                )
            }
            Command::StopRecord => match &state.recording {
                Some(p) => (Value::from(p.display().to_string()), false, command),
                None => return Err(fail("not recording")),
            },
        };

        let envelope = Envelope {
            channel,
            command: command.clone(),
            op: msg.op,
            requested,
            applied: match &value {
                Value::String(s) => s.clone(),
                v => v.to_string(),
            },
            client: client.to_string(),
        };
        match self.shared.tx.try_send(envelope) {
            Ok(()) => {}
            Err(TrySendError::Full(_)) => return Err(fail("control queue full, retry")),
            Err(TrySendError::Disconnected(_)) => return Err(fail("pipeline has shut down")),
        }

        match command {
            Command::SetGain { applied, .. } => state.channels[channel.unwrap()].strip.gain_db = applied,
            Command::SetMode(m) => state.channels[channel.unwrap()].strip.mode = m,
            Command::SetFilter(spec) => state.channels[channel.unwrap()].strip.filter = spec,
            Command::Mute(m) => state.channels[channel.unwrap()].strip.muted = m,
            Command::StartRecord(path) => state.recording = path,
            Command::StopRecord => state.recording = None,
            Command::SubscribeLevels(_) => {}
        }
        if clamped {
            self.shared.counters.clamped.fetch_add(1, Ordering::Relaxed);
        }
        Ok(Ack::new(msg, value, clamped))
    }

    fn next_session_dir(&self) -> Option<PathBuf> {
        let root = self.shared.record_root.as_deref()?;
        (1..)
            .map(|n| root.join(format!("session-{n:03}")))
            .find(|p| !p.exists())
    }

    /// Current stream position and per-channel meter levels.
    pub fn levels(&self) -> (u64, Vec<ChannelLevels>) {
        let state = self.shared.state.lock();
        let channels = state
            .channels
            .iter()
            .map(|c| ChannelLevels {
                id: c.id.clone(),
                pre: c.pre,
                post: c.post,
                mode: c.strip.mode,
                gain_db: c.strip.gain_db,
                muted: c.strip.muted,
            })
            .collect();
        (self.shared.counters.sample_index.load(Ordering::Relaxed), channels)
    }

    pub fn status(&self) -> PipelineStatus {
        let state = self.shared.state.lock();
        let c = &self.shared.counters;
        PipelineStatus {
            rate: self.shared.rate,
            block_size: self.shared.block_size,
            latency_s: self.shared.latency.total_s,
            running: self.is_running(),
            blocks: c.blocks.load(Ordering::Relaxed),
            sample_index: c.sample_index.load(Ordering::Relaxed),
            deadline_misses: c.deadline_misses.load(Ordering::Relaxed),
            underruns: c.underruns.load(Ordering::Relaxed),
            recording: state.recording.is_some(),
            session_path: state.recording.as_ref().map(|p| p.display().to_string()),
            clamp_count: c.clamped.load(Ordering::Relaxed),
            channels: state
                .channels
                .iter()
                .map(|ch| ChannelStatus {
                    id: ch.id.clone(),
                    sink_lane: ch.sink_lane,
                    mode: ch.strip.mode,
                    gain_db: ch.strip.gain_db,
                    muted: ch.strip.muted,
                    filter: ch.strip.filter,
                    pre: ch.pre,
                    post: ch.post,
                })
                .collect(),
        }
    }

    /// Outcome of the most recently finished recording.
    pub fn last_recording(&self) -> Option<std::result::Result<PathBuf, String>> {
        self.shared.state.lock().last_recording.clone()
    }
}
