//! Tri-axis input sources: in-memory series (files, synthetic scenarios)
//! and live TCP frame streams.
//!
//! Network frames are length-prefixed: a `u32` little-endian payload length
//! followed by the payload `tool: u8, sample_index: u64, x: f32, y: f32,
//! z: f32`, all little-endian (21 bytes).

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use parking_lot::{Condvar, Mutex};

use crate::error::{Error, Result};
use crate::signal::TriAxisSeries;

pub const FRAME_PAYLOAD_LEN: usize = 21;

pub fn encode_frame(tool: u8, sample_index: u64, xyz: [f32; 3]) -> [u8; 4 + FRAME_PAYLOAD_LEN] {
    let mut out = [0u8; 4 + FRAME_PAYLOAD_LEN];
    out[..4].copy_from_slice(&(FRAME_PAYLOAD_LEN as u32).to_le_bytes());
    out[4] = tool;
    out[5..13].copy_from_slice(&sample_index.to_le_bytes());
    for (i, v) in xyz.iter().enumerate() {
        out[13 + 4 * i..17 + 4 * i].copy_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_payload(payload: &[u8]) -> Option<(u8, u64, [f32; 3])> {
    if payload.len() != FRAME_PAYLOAD_LEN {
        return None;
    }
    let f = |i: usize| f32::from_le_bytes(payload[9 + 4 * i..13 + 4 * i].try_into().unwrap());
    Some((
        payload[0],
        u64::from_le_bytes(payload[1..9].try_into().unwrap()),
        [f(0), f(1), f(2)],
    ))
}

/// Streams a tool's series as frames, starting at `first_index`.
pub fn write_frames(w: &mut impl Write, tool: u8, series: &TriAxisSeries, first_index: u64) -> io::Result<()> {
    let mut buf = Vec::with_capacity(series.len() * (4 + FRAME_PAYLOAD_LEN));
    for n in 0..series.len() {
        let [x, y, z] = series.sample(n);
        buf.extend_from_slice(&encode_frame(
            tool,
            first_index + n as u64,
            [x as f32, y as f32, z as f32],
        ));
    }
    w.write_all(&buf)
}

pub trait TriSource: Send {
    /// Exclusive end of the stream once known.
    fn end(&self) -> Option<u64>;

    /// Blocks until samples before `until` are available, the stream ends
    /// or `timeout` elapses. Finite in-memory sources return at once.
    fn wait_until(&mut self, _until: u64, _timeout: Duration) {}

    /// Fills `out` with samples starting at `start`. Samples past the end
    /// are zero. Returns how many samples inside the stream were missing
    /// and zero-filled.
    fn read(&mut self, start: u64, out: [&mut [f64]; 3]) -> usize;
}

pub struct SeriesSource {
    series: Arc<TriAxisSeries>,
}

impl SeriesSource {
    pub fn new(series: Arc<TriAxisSeries>) -> Self {
        Self { series }
    }
}

impl TriSource for SeriesSource {
    fn end(&self) -> Option<u64> {
        Some(self.series.len() as u64)
    }

    fn read(&mut self, start: u64, out: [&mut [f64]; 3]) -> usize {
        let len = self.series.len();
        for (dst, src) in out.into_iter().zip(self.series.axes()) {
            let s = (start as usize).min(len);
            let avail = (len - s).min(dst.len());
            dst[..avail].copy_from_slice(&src[s..s + avail]);
            dst[avail..].fill(0.0);
        }
        0
    }
}

#[derive(Default)]
struct FeedState {
    tools: HashMap<u8, BTreeMap<u64, [f32; 3]>>,
    /// Highest index seen per tool, plus one.
    high: HashMap<u8, u64>,
    closed: bool,
}

/// Demultiplexed sample buffer shared by every source bound to one address.
pub struct NetFeed {
    state: Mutex<FeedState>,
    ready: Condvar,
    stream: TcpStream,
}

impl NetFeed {
    /// Connects and starts the reader thread.
    pub fn connect(address: &str, timeout: Duration) -> Result<Arc<Self>> {
        let addr = address
            .to_socket_addrs()
            .map_err(|e| Error::Build(format!("cannot resolve {address}: {e}")))?
            .next()
            .ok_or_else(|| Error::Build(format!("cannot resolve {address}")))?;
        let stream = TcpStream::connect_timeout(&addr, timeout)
            .map_err(|e| Error::Build(format!("network source {address} unreachable: {e}")))?;
        stream.set_nodelay(true).ok();
        let reader = stream
            .try_clone()
            .map_err(|e| Error::Build(format!("network source {address}: {e}")))?;
        let feed = Arc::new(Self {
            state: Mutex::new(FeedState::default()),
            ready: Condvar::new(),
            stream,
        });
        let weak = Arc::downgrade(&feed);
        let address = address.to_string();
        thread::Builder::new()
            .name(format!("net-{address}"))
            .spawn(move || {
                let _closer = CloseOnDrop(weak.clone());
                let mut reader = io::BufReader::new(reader);
                let mut payload = Vec::new();
                loop {
                    let mut len = [0u8; 4];
                    if reader.read_exact(&mut len).is_err() {
                        break;
                    }
                    payload.resize(u32::from_le_bytes(len) as usize, 0);
                    if reader.read_exact(&mut payload).is_err() {
                        break;
                    }
                    let Some(feed) = weak.upgrade() else { break };
                    match decode_payload(&payload) {
                        Some((tool, index, xyz)) => {
                            let mut st = feed.state.lock();
                            st.tools.entry(tool).or_default().insert(index, xyz);
                            let high = st.high.entry(tool).or_default();
                            *high = (*high).max(index + 1);
                            drop(st);
                            feed.ready.notify_all();
                        }
                        None => warn!("{address}: skipping frame with {}-byte payload", payload.len()),
                    }
                }
                debug!("{address}: stream closed");
            })
            .map_err(|e| Error::Build(e.to_string()))?;
        Ok(feed)
    }

    pub fn shutdown(&self) {
        self.stream.shutdown(std::net::Shutdown::Both).ok();
    }
}

/// Marks the feed closed however the reader thread exits, so waiting
/// readers never hang on a dead connection.
struct CloseOnDrop(std::sync::Weak<NetFeed>);

impl Drop for CloseOnDrop {
    fn drop(&mut self) {
        if let Some(feed) = self.0.upgrade() {
            feed.state.lock().closed = true;
            feed.ready.notify_all();
        }
    }
}

impl Drop for NetFeed {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub struct NetworkSource {
    feed: Arc<NetFeed>,
    tool: u8,
}

impl NetworkSource {
    pub fn new(feed: Arc<NetFeed>, tool: u8) -> Self {
        Self { feed, tool }
    }
}

impl TriSource for NetworkSource {
    fn end(&self) -> Option<u64> {
        let st = self.feed.state.lock();
        st.closed.then(|| st.high.get(&self.tool).copied().unwrap_or(0))
    }

    fn wait_until(&mut self, until: u64, timeout: Duration) {
        let deadline = Instant::now() + timeout;
        let mut st = self.feed.state.lock();
        while !st.closed && st.high.get(&self.tool).copied().unwrap_or(0) < until {
            if self.feed.ready.wait_until(&mut st, deadline).timed_out() {
                break;
            }
        }
    }

    fn read(&mut self, start: u64, out: [&mut [f64]; 3]) -> usize {
        let n = out[0].len();
        let mut st = self.feed.state.lock();
        let end = st.closed.then(|| st.high.get(&self.tool).copied().unwrap_or(0));
        let buf = st.tools.entry(self.tool).or_default();
        // late frames for blocks already played are useless
        *buf = buf.split_off(&start);
        let [x, y, z] = out;
        let mut missing = 0;
        for i in 0..n {
            let index = start + i as u64;
            match buf.remove(&index) {
                Some([a, b, c]) => {
                    x[i] = a as f64;
                    y[i] = b as f64;
                    z[i] = c as f64;
                }
                None => {
                    x[i] = 0.0;
                    y[i] = 0.0;
                    z[i] = 0.0;
                    if end.is_none_or(|e| index < e) {
                        missing += 1;
                    }
                }
            }
        }
        missing
    }
}
