//! Network control surface for a running pipeline.
//!
//! * `GET /status` returns a JSON snapshot of the pipeline.
//! * `/control` is a WebSocket speaking JSON control messages. Every
//!   request is answered by an ack or an error frame carrying its `id`.
//!   After `subscribe_levels` the connection also receives telemetry frames
//!   at 10 Hz.
//!
//! Replies and telemetry for one connection are written by a single task,
//! so an ack always precedes telemetry that reflects it.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::{SinkExt, StreamExt};
use log::{debug, info};
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::time::MissedTickBehavior;

use vibromix::control::{ControlMessage, ErrorReply, Op, TelemetryFrame};
use vibromix::dsp::METER_EMIT_HZ;
use vibromix::pipeline::ControlHandle;

pub const DEFAULT_PORT: u16 = 8765;
pub const PORT_ENV: &str = "VIBROMIX_PORT";

struct AppState {
    handle: ControlHandle,
    started: Instant,
    clients: AtomicU64,
    connected: AtomicU64,
}

pub fn router(handle: ControlHandle) -> Router {
    let state = Arc::new(AppState {
        handle,
        started: Instant::now(),
        clients: AtomicU64::new(0),
        connected: AtomicU64::new(0),
    });
    Router::new()
        .route("/status", get(status))
        .route("/control", get(control))
        .with_state(state)
}

/// Binds `addr` and returns the bound address plus the server future.
pub async fn bind(
    handle: ControlHandle,
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, impl Future<Output = std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    info!("control service listening on {local}");
    let app = router(handle);
    Ok((local, async move { axum::serve(listener, app).await }))
}

/// Serves until the process ends.
pub async fn serve(handle: ControlHandle, addr: SocketAddr) -> std::io::Result<()> {
    let (_, server) = bind(handle, addr).await?;
    server.await
}

async fn status(State(state): State<Arc<AppState>>) -> Json<Value> {
    let mut v = serde_json::to_value(state.handle.status()).unwrap_or_default();
    if let Value::Object(map) = &mut v {
        map.insert("uptime_s".into(), state.started.elapsed().as_secs_f64().into());
        map.insert("clients".into(), state.connected.load(Ordering::Relaxed).into());
    }
    Json(v)
}

async fn control(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    let n = state.clients.fetch_add(1, Ordering::Relaxed) + 1;
    ws.on_upgrade(move |socket| connection(socket, state, format!("ws-{n}")))
        .into_response()
}

fn reply_json(reply: &impl serde::Serialize) -> Message {
    Message::Text(serde_json::to_string(reply).unwrap_or_default().into())
}

/// Handles one text frame; returns the reply and, for `subscribe_levels`,
/// the new subscription state.
fn handle_text(handle: &ControlHandle, text: &str, client: &str) -> (Message, Option<bool>) {
    let msg = match ControlMessage::parse(text) {
        Ok(m) => m,
        Err(e) => {
            let reply = ErrorReply::new(ControlMessage::salvage_id(text), None, None, e);
            return (reply_json(&reply), None);
        }
    };
    match handle.apply(&msg, client) {
        Ok(ack) => {
            let sub = (msg.op == Op::SubscribeLevels).then(|| ack.value.as_bool().unwrap_or(true));
            (reply_json(&ack), sub)
        }
        Err(err) => (reply_json(&err), None),
    }
}

async fn connection(socket: WebSocket, state: Arc<AppState>, client: String) {
    debug!("{client} connected");
    state.connected.fetch_add(1, Ordering::Relaxed);
    let (mut tx, mut rx) = socket.split();
    let mut subscribed = false;
    let mut seq = 0u64;
    let mut ticker = tokio::time::interval(Duration::from_secs_f64(1.0 / METER_EMIT_HZ));
    // a slow consumer loses frames rather than queueing them
    ticker.set_missed_tick_behavior(MissedTickBehavior::Skip);
    loop {
        tokio::select! {
            incoming = rx.next() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => {
                        let (reply, sub) = handle_text(&state.handle, text.as_str(), &client);
                        if let Some(on) = sub {
                            if on && !subscribed {
                                ticker.reset_immediately();
                            }
                            subscribed = on;
                        }
                        reply
                    }
                    Some(Ok(Message::Binary(_))) => reply_json(&ErrorReply::new(
                        None, None, None, "binary frames are not supported; send JSON text",
                    )),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if tx.send(reply).await.is_err() {
                    break;
                }
            }
            _ = ticker.tick(), if subscribed => {
                seq += 1;
                let (sample_index, channels) = state.handle.levels();
                let frame = TelemetryFrame::new(seq, state.started.elapsed().as_secs_f64(), sample_index, channels);
                if tx.send(reply_json(&frame)).await.is_err() {
                    break;
                }
            }
        }
    }
    state.connected.fetch_sub(1, Ordering::Relaxed);
    debug!("{client} disconnected");
}
