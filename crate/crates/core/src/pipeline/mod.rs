//! Streaming engine: tri-axis sources → one channel strip per tool → sink
//! lanes, processed in fixed blocks with live parameter updates.
//!
//! Each block is processed once its input is complete and leaves the
//! engine one block later, so output sample `n` carries processed input
//! sample `n - block_size`. Offline runs produce exactly as many output
//! samples as the longest input.

mod config;
mod handle;
mod priority;
pub mod source;

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::Ordering;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::Receiver;
use log::{info, warn};
use parking_lot::Mutex;
use serde::Serialize;

pub use config::{
    ChannelConfig, PipelineConfig, ScheduledControl, ScriptRef, SourceBinding, DEFAULT_BLOCK_SIZE, MAX_BLOCK_SIZE,
    MIN_BLOCK_SIZE,
};
pub use handle::{ChannelStatus, ControlHandle, PipelineStatus, MAILBOX_CAPACITY};
use handle::{Counters, Envelope, LiveChannel, LiveState, Shared};
use source::{NetFeed, NetworkSource, SeriesSource, TriSource};

use crate::control::{Command, ControlMessage};
use crate::dsp::{design_bandpass, StripProcessor};
use crate::error::{Error, Result};
use crate::io::csv_series::{read_tri_csv, ACCEL_COLUMNS};
use crate::io::manifest::{write_session, SessionExtras, SessionManifest};
use crate::io::wav::{read_wav, tri_from_lanes};
use crate::session::{Marker, ParamChange, Session, SessionLog, ToolRecording, Underrun, MARKER_END, MARKER_START};
use crate::signal::{SampleBlock, SignalKind, TriAxisSeries};
use crate::synth::{render_scenario, ScenarioScript};

/// How long an offline run waits for network samples before zero-filling.
const NETWORK_WAIT: Duration = Duration::from_secs(2);
const CONNECT_TIMEOUT: Duration = Duration::from_secs(2);

/// Input-to-output delay attributable to buffering and filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatencyReport {
    pub block_s: f64,
    /// Largest band-pass group delay over the channels, taken at each
    /// band's geometric center.
    pub group_delay_s: f64,
    pub total_s: f64,
}

impl LatencyReport {
    pub fn total_samples(&self, rate: f64) -> f64 {
        self.total_s * rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    /// As fast as possible until every source is exhausted.
    Offline,
    /// Paced by the wall clock; runs for `duration` seconds or until
    /// [`ControlHandle::stop`].
    /// The calling thread is moved to `SCHED_FIFO` for the run where the
    /// process is allowed to.
    RealTime { duration: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: SessionLog,
    /// One block per sink lane, index = lane. Empty if output retention
    /// was switched off.
    pub lanes: Vec<SampleBlock>,
    /// Raw input and delivered output per channel (when retained).
    pub session: Session,
}

impl RunOutput {
    pub fn lane(&self, lane: usize) -> Option<&SampleBlock> {
        self.lanes.get(lane)
    }
}

struct ChannelRuntime {
    id: String,
    lane: usize,
    source: Box<dyn TriSource>,
    strip: StripProcessor,
    delay: VecDeque<f64>,
    raw: [Vec<f64>; 3],
    post: Vec<f64>,
}

struct Recorder {
    path: PathBuf,
    start: u64,
    raw: Vec<[Vec<f64>; 3]>,
    post: Vec<Vec<f64>>,
    params_from: usize,
    underruns_from: usize,
}

pub struct Pipeline {
    rate: f64,
    block_size: usize,
    channels: Vec<ChannelRuntime>,
    lane_count: usize,
    shared: Arc<Shared>,
    rx: Receiver<Envelope>,
    schedule: VecDeque<(u64, ControlMessage)>,
    record_path: Option<PathBuf>,
    feeds: Vec<Arc<NetFeed>>,
    retain: bool,
    scratch: [Vec<f64>; 5],
}

fn build_err(channel: &str, e: impl std::fmt::Display) -> Error {
    Error::Build(format!("channel {channel}: {e}"))
}

fn load_script(script: &ScriptRef) -> Result<ScenarioScript> {
    match script {
        ScriptRef::Inline(s) => Ok((**s).clone()),
        ScriptRef::Path(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            ScenarioScript::from_json(&text)
        }
    }
}

fn open_file(path: &std::path::Path, lanes: Option<[usize; 3]>, tool: &str) -> Result<TriAxisSeries> {
    if path.is_dir() {
        let manifest = SessionManifest::load(path)?;
        let raw = manifest
            .channels
            .iter()
            .find(|c| c.id == tool)
            .and_then(|c| c.raw.as_ref())
            .ok_or_else(|| Error::Build(format!("session {} has no raw stream for {tool:?}", path.display())))?;
        let wav = read_wav(&path.join(raw))?;
        return tri_from_lanes(&wav, lanes.unwrap_or([0, 1, 2]), SignalKind::Acceleration);
    }
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("csv") => {
            let imported = read_tri_csv(path, ACCEL_COLUMNS, SignalKind::Acceleration)?;
            for w in &imported.warnings {
                warn!("{w}");
            }
            Ok(imported.series)
        }
        _ => {
            let wav = read_wav(path)?;
            tri_from_lanes(&wav, lanes.unwrap_or([0, 1, 2]), SignalKind::Acceleration)
        }
    }
}

fn open_source(ch: &ChannelConfig, rate: f64, feeds: &mut HashMap<String, Arc<NetFeed>>) -> Result<Box<dyn TriSource>> {
    let series = match &ch.source {
        SourceBinding::Memory(s) => s.clone(),
        SourceBinding::File { path, lanes, tool } => {
            Arc::new(open_file(path, *lanes, tool.as_deref().unwrap_or(&ch.id)).map_err(|e| build_err(&ch.id, e))?)
        }
        SourceBinding::Synth { script, tool } => {
            let script = load_script(script).map_err(|e| build_err(&ch.id, e))?;
            let tool = tool.as_deref().unwrap_or(&ch.id);
            let mut rendered = render_scenario(&script).map_err(|e| build_err(&ch.id, e))?;
            Arc::new(
                rendered
                    .tools
                    .remove(tool)
                    .ok_or_else(|| build_err(&ch.id, format!("script has no tool {tool:?}")))?,
            )
        }
        SourceBinding::Network { address, tool } => {
            let feed = match feeds.get(address) {
                Some(f) => f.clone(),
                None => {
                    let f = NetFeed::connect(address, CONNECT_TIMEOUT).map_err(|e| build_err(&ch.id, e))?;
                    feeds.insert(address.clone(), f.clone());
                    f
                }
            };
            return Ok(Box::new(NetworkSource::new(feed, *tool)));
        }
    };
    if series.rate() != rate {
        return Err(build_err(
            &ch.id,
            format!("source is {} Hz but the pipeline runs at {rate} Hz", series.rate()),
        ));
    }
    Ok(Box::new(SeriesSource::new(series)))
}

impl Pipeline {
    /// Validates the configuration, opens every source and designs the
    /// filters. The pipeline starts idle.
    pub fn build(config: PipelineConfig) -> Result<Self> {
        config.validate().map_err(|e| Error::Build(e.to_string()))?;
        let rate = config.rate;
        let block_size = config.block_size;

        let mut feeds = HashMap::new();
        let mut channels = Vec::with_capacity(config.channels.len());
        let mut live = Vec::with_capacity(config.channels.len());
        let mut group_delay_s: f64 = 0.0;
        for ch in &config.channels {
            let source = open_source(ch, rate, &mut feeds)?;
            let strip = StripProcessor::new(ch.strip.clone(), rate).map_err(|e| build_err(&ch.id, e))?;
            if let Some(spec) = ch.strip.filter {
                let cascade = design_bandpass(&spec, rate)?;
                group_delay_s = group_delay_s.max(cascade.group_delay((spec.low_cut * spec.high_cut).sqrt()));
            }
            live.push(LiveChannel {
                id: ch.id.clone(),
                sink_lane: ch.sink_lane,
                strip: strip.strip().clone(),
                pre: 0.0,
                post: 0.0,
            });
            channels.push(ChannelRuntime {
                id: ch.id.clone(),
                lane: ch.sink_lane,
                source,
                strip,
                delay: std::iter::repeat_n(0.0, block_size).collect(),
                raw: Default::default(),
                post: Vec::new(),
            });
        }
        let block_s = block_size as f64 / rate;
        let latency = LatencyReport {
            block_s,
            group_delay_s,
            total_s: block_s + group_delay_s,
        };
        info!(
            "pipeline built: {} channels, {block_size}-sample blocks at {rate} Hz, latency {:.2} ms ({:.2} ms buffering + {:.2} ms filter)",
            channels.len(),
            latency.total_s * 1e3,
            block_s * 1e3,
            group_delay_s * 1e3
        );

        let mut schedule: Vec<(u64, ControlMessage)> = config
            .schedule
            .iter()
            .map(|s| ((s.t * rate).round() as u64, s.message.clone()))
            .collect();
        schedule.sort_by_key(|(at, _)| *at);

        let (tx, rx) = crossbeam_channel::bounded(MAILBOX_CAPACITY);
        let shared = Arc::new(Shared {
            rate,
            block_size,
            latency,
            record_root: config.record_path.clone(),
            tx,
            state: Mutex::new(LiveState {
                channels: live,
                ..LiveState::default()
            }),
            counters: Counters::default(),
            running: Default::default(),
            stop: Default::default(),
        });
        Ok(Self {
            rate,
            block_size,
            lane_count: channels.iter().map(|c| c.lane + 1).max().unwrap_or(0),
            channels,
            shared,
            rx,
            schedule: schedule.into(),
            record_path: config.record_path,
            feeds: feeds.into_values().collect(),
            retain: true,
            scratch: std::array::from_fn(|_| vec![0.0; block_size]),
        })
    }

    pub fn latency(&self) -> LatencyReport {
        self.shared.latency
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn control(&self) -> ControlHandle {
        ControlHandle {
            shared: self.shared.clone(),
        }
    }

    /// Whether [`RunOutput`] keeps the full input and output streams.
    /// Long live runs should switch this off.
    pub fn retain_output(&mut self, retain: bool) {
        self.retain = retain;
    }

    pub fn run(mut self, mode: RunMode) -> Result<RunOutput> {
        let shared = self.shared.clone();
        shared.running.store(true, Ordering::SeqCst);
        let priority = matches!(mode, RunMode::RealTime { .. }).then(priority::RealtimeGuard::acquire);
        let result = self.run_inner(mode);
        drop(priority);
        shared.running.store(false, Ordering::SeqCst);
        for feed in &self.feeds {
            feed.shutdown();
        }
        result
    }

    fn run_inner(&mut self, mode: RunMode) -> Result<RunOutput> {
        let b = self.block_size;
        let mut log = SessionLog {
            rate: self.rate,
            block_size: b,
            ..SessionLog::default()
        };
        let mut recorder = None;
        if let (RunMode::Offline, Some(path)) = (mode, self.record_path.clone()) {
            self.shared.state.lock().recording = Some(path.clone());
            recorder = Some(self.new_recorder(path, 0, &log));
        }

        let limit = match mode {
            RunMode::RealTime { duration: Some(d) } => Some((d * self.rate).round() as u64),
            _ => None,
        };
        let period = b as f64 / self.rate;
        let clock = Instant::now();
        let mut pos = 0u64;
        let mut k = 0u64;
        loop {
            if self.shared.stop.load(Ordering::SeqCst) {
                break;
            }
            let n = match mode {
                RunMode::Offline => {
                    for ch in &mut self.channels {
                        ch.source.wait_until(pos + b as u64, NETWORK_WAIT);
                    }
                    let ends: Option<Vec<u64>> = self.channels.iter().map(|c| c.source.end()).collect();
                    match ends.and_then(|e| e.into_iter().max()) {
                        Some(end) => (end.saturating_sub(pos) as usize).min(b),
                        None => b,
                    }
                }
                RunMode::RealTime { .. } => {
                    let n = limit.map_or(b, |l| (l.saturating_sub(pos) as usize).min(b));
                    if n > 0 {
                        let captured = clock + Duration::from_secs_f64((k + 1) as f64 * period);
                        let now = Instant::now();
                        if captured > now {
                            thread::sleep(captured - now);
                        }
                    }
                    n
                }
            };
            if n == 0 {
                break;
            }
            self.process_block(
                pos,
                n,
                &mut log,
                &mut recorder,
                matches!(mode, RunMode::RealTime { .. }),
            );
            if let RunMode::RealTime { .. } = mode {
                let deadline = clock + Duration::from_secs_f64((k + 2) as f64 * period);
                if Instant::now() > deadline {
                    log.deadline_misses += 1;
                    self.shared.counters.deadline_misses.fetch_add(1, Ordering::Relaxed);
                }
            }
            pos += n as u64;
            k += 1;
            log.blocks = k;
        }
        log.samples = pos;
        log.markers = vec![
            Marker {
                name: MARKER_START.into(),
                sample_index: 0,
            },
            Marker {
                name: MARKER_END.into(),
                sample_index: pos,
            },
        ];
        if let Some(rec) = recorder.take() {
            self.finish_recording(rec, pos, &log, false);
        }
        if log.deadline_misses > 0 {
            warn!("{} of {} blocks missed their deadline", log.deadline_misses, log.blocks);
        }

        let mut lanes = Vec::new();
        let mut tools = Vec::new();
        if self.retain {
            lanes = vec![SampleBlock::zeros(pos as usize, self.rate); self.lane_count];
            for ch in &mut self.channels {
                let post = std::mem::take(&mut ch.post);
                let [x, y, z] = std::mem::take(&mut ch.raw);
                lanes[ch.lane] = SampleBlock::new(post.clone(), self.rate);
                tools.push(ToolRecording {
                    id: ch.id.clone(),
                    raw: Some(TriAxisSeries::new(x, y, z, self.rate, SignalKind::Acceleration)?),
                    post: Some(SampleBlock::new(post, self.rate)),
                });
            }
        }
        Ok(RunOutput {
            session: Session {
                rate: self.rate,
                tools,
                force: None,
                log: log.clone(),
            },
            lanes,
            log,
        })
    }

    fn new_recorder(&self, path: PathBuf, start: u64, log: &SessionLog) -> Recorder {
        info!("recording to {}", path.display());
        Recorder {
            path,
            start,
            raw: vec![Default::default(); self.channels.len()],
            post: vec![Vec::new(); self.channels.len()],
            params_from: log.params.len(),
            underruns_from: log.underruns.len(),
        }
    }

    /// Writes the recording; in real-time mode on a helper thread so the
    /// processing loop keeps its schedule.
    fn finish_recording(&self, rec: Recorder, end: u64, log: &SessionLog, background: bool) {
        let rate = self.rate;
        let len = end - rec.start;
        let rebase = |i: u64| i.saturating_sub(rec.start);
        let session_log = SessionLog {
            rate,
            block_size: self.block_size,
            blocks: len.div_ceil(self.block_size as u64),
            samples: len,
            deadline_misses: log.deadline_misses,
            underruns: log.underruns[rec.underruns_from..]
                .iter()
                .map(|u| Underrun {
                    sample_index: rebase(u.sample_index),
                    ..u.clone()
                })
                .collect(),
            params: log.params[rec.params_from..]
                .iter()
                .map(|p| ParamChange {
                    sample_index: rebase(p.sample_index),
                    ..p.clone()
                })
                .collect(),
            markers: vec![
                Marker {
                    name: MARKER_START.into(),
                    sample_index: 0,
                },
                Marker {
                    name: MARKER_END.into(),
                    sample_index: len,
                },
            ],
        };
        let ids: Vec<String> = self.channels.iter().map(|c| c.id.clone()).collect();
        let shared = self.shared.clone();
        let job = move || {
            let Recorder { path, raw, post, .. } = rec;
            let tools: Result<Vec<ToolRecording>> = ids
                .into_iter()
                .zip(raw.into_iter().zip(post))
                .map(|(id, ([x, y, z], post))| {
                    Ok(ToolRecording {
                        id,
                        raw: Some(TriAxisSeries::new(x, y, z, rate, SignalKind::Acceleration)?),
                        post: Some(SampleBlock::new(post, rate)),
                    })
                })
                .collect();
            let outcome = tools
                .and_then(|tools| {
                    let session = Session {
                        rate,
                        tools,
                        force: None,
                        log: session_log,
                    };
                    write_session(&path, &session, &SessionExtras::default())
                })
                .map(|_| path.clone())
                .map_err(|e| e.to_string());
            match &outcome {
                Ok(p) => info!("recording written to {}", p.display()),
                Err(e) => warn!("recording to {} failed: {e}", path.display()),
            }
            let mut state = shared.state.lock();
            if state.recording.as_ref() == Some(&path) {
                state.recording = None;
            }
            state.last_recording = Some(outcome);
        };
        if background {
            thread::spawn(job);
        } else {
            job();
        }
    }

    fn apply(
        &mut self,
        env: Envelope,
        pos: u64,
        log: &mut SessionLog,
        recorder: &mut Option<Recorder>,
        realtime: bool,
    ) {
        let channel_id = env.channel.map(|i| self.channels[i].id.clone()).unwrap_or_default();
        match env.command {
            Command::SetGain { applied, .. } => {
                self.channels[env.channel.unwrap()].strip.set_gain(applied);
            }
            Command::SetMode(m) => self.channels[env.channel.unwrap()].strip.set_mode(m),
            Command::SetFilter(spec) => {
                if let Err(e) = self.channels[env.channel.unwrap()].strip.set_filter(spec) {
                    warn!("set_filter on {channel_id}: {e}");
                }
            }
            Command::Mute(m) => self.channels[env.channel.unwrap()].strip.set_muted(m),
            Command::StartRecord(Some(path)) => {
                if recorder.is_some() {
                    warn!("start_record ignored: already recording");
                } else {
                    *recorder = Some(self.new_recorder(path, pos, log));
                }
            }
            Command::StartRecord(None) | Command::SubscribeLevels(_) => {}
            Command::StopRecord => {
                // the stop itself belongs in the recorded log
                log.params.push(ParamChange {
                    sample_index: pos,
                    channel: channel_id,
                    op: env.op.as_str().into(),
                    requested: env.requested,
                    applied: env.applied,
                    client: env.client,
                });
                if let Some(rec) = recorder.take() {
                    self.finish_recording(rec, pos, log, realtime);
                }
                return;
            }
        }
        log.params.push(ParamChange {
            sample_index: pos,
            channel: channel_id,
            op: env.op.as_str().into(),
            requested: env.requested,
            applied: env.applied,
            client: env.client,
        });
    }

    fn process_block(
        &mut self,
        pos: u64,
        n: usize,
        log: &mut SessionLog,
        recorder: &mut Option<Recorder>,
        realtime: bool,
    ) {
        if !self.schedule.is_empty() {
            let handle = self.control();
            while self.schedule.front().is_some_and(|(at, _)| *at <= pos) {
                let (_, msg) = self.schedule.pop_front().unwrap();
                if let Err(e) = handle.apply(&msg, "schedule") {
                    warn!("scheduled {} rejected: {e}", msg.op);
                }
            }
        }
        while let Ok(env) = self.rx.try_recv() {
            self.apply(env, pos, log, recorder, realtime);
        }

        let [x, y, z, processed, delivered] = &mut self.scratch;
        let (x, y, z) = (&mut x[..n], &mut y[..n], &mut z[..n]);
        let (processed, delivered) = (&mut processed[..n], &mut delivered[..n]);
        for (i, ch) in self.channels.iter_mut().enumerate() {
            let missing = ch.source.read(pos, [&mut *x, &mut *y, &mut *z]);
            if missing > 0 {
                warn!("{}: {missing} samples missing at {pos}, zero-filled", ch.id);
                log.underruns.push(Underrun {
                    channel: ch.id.clone(),
                    sample_index: pos,
                    missing: missing as u64,
                });
                self.shared
                    .counters
                    .underruns
                    .fetch_add(missing as u64, Ordering::Relaxed);
            }
            ch.strip.process(x, y, z, processed);
            ch.delay.extend(processed.iter().copied());
            for d in delivered.iter_mut() {
                *d = ch.delay.pop_front().unwrap_or(0.0);
            }
            if self.retain {
                ch.raw[0].extend_from_slice(x);
                ch.raw[1].extend_from_slice(y);
                ch.raw[2].extend_from_slice(z);
                ch.post.extend_from_slice(delivered);
            }
            if let Some(rec) = recorder.as_mut() {
                rec.raw[i][0].extend_from_slice(x);
                rec.raw[i][1].extend_from_slice(y);
                rec.raw[i][2].extend_from_slice(z);
                rec.post[i].extend_from_slice(delivered);
            }
        }

        if let Some(mut state) = self.shared.state.try_lock() {
            for (live, ch) in state.channels.iter_mut().zip(&self.channels) {
                (live.pre, live.post) = ch.strip.levels();
            }
        }
        let c = &self.shared.counters;
        c.sample_index.store(pos + n as u64, Ordering::Relaxed);
        c.blocks.fetch_add(1, Ordering::Relaxed);
    }
}
