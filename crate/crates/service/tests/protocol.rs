use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio_tungstenite::tungstenite::Message;

use vibromix::dsp::ChannelStrip;
use vibromix::pipeline::{ChannelConfig, ControlHandle, Pipeline, PipelineConfig, RunMode, SourceBinding};
use vibromix::{SignalKind, TriAxisSeries};

type Ws = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>>;

struct Rig {
    addr: std::net::SocketAddr,
    handle: ControlHandle,
    worker: Option<thread::JoinHandle<()>>,
    _dir: tempfile::TempDir,
}

impl Drop for Rig {
    fn drop(&mut self) {
        self.handle.stop();
        if let Some(w) = self.worker.take() {
            w.join().unwrap();
        }
    }
}

async fn rig() -> Rig {
    let dir = tempfile::tempdir().unwrap();
    let tone = |f: f64| {
        Arc::new(TriAxisSeries::from_fn(
            8000,
            8000.0,
            SignalKind::Acceleration,
            move |n| {
                let v = (2.0 * std::f64::consts::PI * f * n as f64 / 8000.0).sin();
                [v, 0.5 * v, 0.0]
            },
        ))
    };
    let mut config = PipelineConfig::new(
        ["left", "right"]
            .iter()
            .enumerate()
            .map(|(i, id)| ChannelConfig {
                id: id.to_string(),
                source: SourceBinding::Memory(tone(200.0 + 100.0 * i as f64)),
                strip: ChannelStrip::default(),
                sink_lane: i,
            })
            .collect(),
    );
    config.record_path = Some(dir.path().to_path_buf());
    let mut pipeline = Pipeline::build(config).unwrap();
    pipeline.retain_output(false);
    let handle = pipeline.control();
    let worker = thread::spawn(move || {
        pipeline.run(RunMode::RealTime { duration: None }).unwrap();
    });
    let (addr, server) = vibromix_service::bind(handle.clone(), "127.0.0.1:0".parse().unwrap())
        .await
        .unwrap();
    tokio::spawn(server);
    Rig {
        addr,
        handle,
        worker: Some(worker),
        _dir: dir,
    }
}

async fn connect(rig: &Rig) -> Ws {
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/control", rig.addr))
        .await
        .unwrap();
    ws
}

async fn recv_json(ws: &mut Ws) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("reply within 5 s")
            .expect("stream open")
            .unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

/// Next frame that is not telemetry.
async fn recv_reply(ws: &mut Ws) -> Value {
    loop {
        let v = recv_json(ws).await;
        if v["type"] != "telemetry" {
            return v;
        }
    }
}

async fn send(ws: &mut Ws, v: Value) {
    ws.send(Message::text(v.to_string())).await.unwrap();
}

async fn get_status(rig: &Rig) -> Value {
    let mut sock = tokio::net::TcpStream::connect(rig.addr).await.unwrap();
    sock.write_all(b"GET /status HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut buf = String::new();
    sock.read_to_string(&mut buf).await.unwrap();
    let body = &buf[buf.find("\r\n\r\n").unwrap() + 4..];
    // tolerate chunked encoding
    let start = body.find('{').unwrap();
    let end = body.rfind('}').unwrap();
    serde_json::from_str(&body[start..=end]).unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn gain_ack_and_clamp() {
    let rig = rig().await;
    let mut ws = connect(&rig).await;
    send(
        &mut ws,
        json!({"id": 1, "op": "set_gain", "channel": "left", "value": 4}),
    )
    .await;
    let ack = recv_reply(&mut ws).await;
    assert_eq!(ack["type"], "ack");
    assert_eq!(ack["id"], 1);
    assert_eq!(ack["value"], 4.0);
    assert_eq!(ack["clamped"], false);

    send(
        &mut ws,
        json!({"id": 2, "op": "set_gain", "channel": "left", "value": 15}),
    )
    .await;
    let ack = recv_reply(&mut ws).await;
    assert_eq!(ack["value"], 10.0);
    assert_eq!(ack["clamped"], true);
}

#[tokio::test(flavor = "multi_thread")]
async fn clamp_counter_and_recording_in_status() {
    let rig = rig().await;
    let status = get_status(&rig).await;
    assert_eq!(status["recording"], false);
    assert_eq!(status["clamp_count"], 0);
    assert_eq!(status["channels"].as_array().unwrap().len(), 2);

    let mut ws = connect(&rig).await;
    for (i, v) in [11.0, 20.0, 99.0].into_iter().enumerate() {
        send(
            &mut ws,
            json!({"id": i, "op": "set_gain", "channel": "right", "value": v}),
        )
        .await;
        assert_eq!(recv_reply(&mut ws).await["clamped"], true);
    }
    send(&mut ws, json!({"id": "r", "op": "start_record"})).await;
    let ack = recv_reply(&mut ws).await;
    assert_eq!(ack["type"], "ack");
    let path = ack["value"].as_str().unwrap().to_string();

    let status = get_status(&rig).await;
    assert_eq!(status["clamp_count"], 3);
    assert_eq!(status["recording"], true);
    assert_eq!(status["session_path"], path.as_str());
    assert!(status["uptime_s"].as_f64().unwrap() >= 0.0);

    send(&mut ws, json!({"id": "r2", "op": "start_record"})).await;
    let err = recv_reply(&mut ws).await;
    assert_eq!(err["type"], "error");
    assert_eq!(err["id"], "r2");

    send(&mut ws, json!({"id": "s", "op": "stop_record"})).await;
    assert_eq!(recv_reply(&mut ws).await["type"], "ack");
    let deadline = Instant::now() + Duration::from_secs(5);
    while rig.handle.last_recording().is_none() && Instant::now() < deadline {
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let written = rig.handle.last_recording().unwrap().unwrap();
    assert!(written.join("manifest.json").is_file());
    assert!(written.join("params.csv").is_file());
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_json_keeps_connection() {
    let rig = rig().await;
    let mut ws = connect(&rig).await;
    ws.send(Message::text("{this is not json")).await.unwrap();
    let err = recv_reply(&mut ws).await;
    assert_eq!(err["type"], "error");
    send(&mut ws, json!({"id": 5, "op": "teleport", "channel": "left"})).await;
    let err = recv_reply(&mut ws).await;
    assert_eq!(err["type"], "error");
    assert_eq!(err["id"], 5);
    send(
        &mut ws,
        json!({"id": 6, "op": "set_mode", "channel": "middle", "value": "F1"}),
    )
    .await;
    assert_eq!(recv_reply(&mut ws).await["type"], "error");
    send(
        &mut ws,
        json!({"id": 7, "op": "set_mode", "channel": "right", "value": "F1"}),
    )
    .await;
    let ack = recv_reply(&mut ws).await;
    assert_eq!(ack["type"], "ack");
    assert_eq!(ack["value"], "F1");
}

#[tokio::test(flavor = "multi_thread")]
async fn telemetry_at_ten_hz_with_ordered_ack() {
    let rig = rig().await;
    let mut ws = connect(&rig).await;
    send(&mut ws, json!({"id": 1, "op": "subscribe_levels"})).await;
    assert_eq!(recv_json(&mut ws).await["type"], "ack");

    let t0 = Instant::now();
    let mut frames = Vec::new();
    while t0.elapsed() < Duration::from_secs(1) {
        let v = recv_json(&mut ws).await;
        if t0.elapsed() <= Duration::from_secs(1) {
            frames.push(v);
        }
    }
    assert!(frames.len() >= 9, "{} frames in 1 s", frames.len());
    let seqs: Vec<u64> = frames.iter().map(|f| f["seq"].as_u64().unwrap()).collect();
    assert!(seqs.windows(2).all(|w| w[1] > w[0]));
    assert!(frames.last().unwrap()["channels"][0]["pre"].as_f64().unwrap() > 0.1);

    send(
        &mut ws,
        json!({"id": 2, "op": "set_gain", "channel": "left", "value": -6}),
    )
    .await;
    let mut saw_ack = false;
    for _ in 0..5 {
        let v = recv_json(&mut ws).await;
        if v["type"] == "ack" {
            saw_ack = true;
        } else if v["channels"][0]["gain_db"] == -6.0 {
            assert!(saw_ack, "telemetry showed the new gain before its ack");
        }
    }
    assert!(saw_ack);
}
