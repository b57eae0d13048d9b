use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::time::{Duration, Instant};

use futures::StreamExt;
use serde_json::{json, Value};
use tissuebench_teleop::{Ack, ServeConfig, Service, SessionState, TeleopError};
use tokio_tungstenite::tungstenite::protocol::frame::coding::CloseCode;
use tokio_tungstenite::tungstenite::Message;

const FIELDS: [&str; 11] = [
    "t",
    "cmd_pos",
    "pos",
    "current",
    "f_current",
    "f_sensor",
    "f_fused",
    "class",
    "class_probs",
    "deformation_pct",
    "contour_area",
];

fn config() -> ServeConfig {
    ServeConfig {
        addr: SocketAddr::from(([127, 0, 0, 1], 0)),
        ..ServeConfig::default()
    }
}

struct Client {
    base: String,
    http: reqwest::Client,
    seq: u64,
}

impl Client {
    fn new(service: &Service) -> Self {
        Self {
            base: format!("http://{}", service.local_addr()),
            http: reqwest::Client::new(),
            seq: 0,
        }
    }

    async fn state(&self) -> SessionState {
        self.http
            .get(format!("{}/state", self.base))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap()
    }

    async fn command(&mut self, kind: Value) -> Ack {
        self.seq += 1;
        let body = json!({ "client_id": "test", "sequence_number": self.seq, "kind": kind });
        self.http
            .post(format!("{}/command", self.base))
            .json(&body)
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap()
    }

    async fn wait_until(&self, what: &str, mut pred: impl FnMut(&SessionState) -> bool) -> SessionState {
        let deadline = Instant::now() + Duration::from_secs(30);
        loop {
            let s = self.state().await;
            if pred(&s) {
                return s;
            }
            assert!(Instant::now() < deadline, "timed out waiting for {what}: {s:?}");
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
    }
}

async fn subscribe(
    service: &Service,
) -> tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>> {
    let url = format!("ws://{}/telemetry", service.local_addr());
    tokio_tungstenite::connect_async(url).await.unwrap().0
}

fn text(m: Message) -> Option<Value> {
    match m {
        Message::Text(t) => Some(serde_json::from_str(t.as_str()).unwrap()),
        _ => None,
    }
}

#[tokio::test]
async fn probe_moves_the_tool_and_busy_is_reported() {
    let service = Service::start(config()).await.unwrap();
    let mut c = Client::new(&service);
    let ack = c.command(json!({"type": "probe", "target_mm": 20})).await;
    assert!(ack.accepted, "{ack:?}");
    assert_eq!((ack.client_id.as_str(), ack.sequence_number), ("test", 1));
    let busy = c.command(json!({"type": "probe", "target_mm": 10})).await;
    assert_eq!(busy.reason.as_deref(), Some("busy"));
    assert_eq!(busy.sequence_number, 2);
    let s = c.wait_until("arrival", |s| !s.moving && s.latest.pos > 19.9).await;
    assert!((s.latest.pos - 20.0).abs() < 0.01);
    assert_eq!(s.latest.class, Some(tissuebench_core::vision::DeformationClass::Compress01));
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn out_of_stroke_and_unknown_preset_are_rejected() {
    let service = Service::start(config()).await.unwrap();
    let mut c = Client::new(&service);
    let ack = c.command(json!({"type": "probe", "target_mm": 40})).await;
    assert!(!ack.accepted);
    assert_eq!(ack.reason.as_deref(), Some("target exceeds 35 mm stroke"));
    let ack = c.command(json!({"type": "select_tissue", "preset": "gelatin"})).await;
    assert_eq!(ack.reason.as_deref(), Some("unknown tissue preset `gelatin`"));
    let ack = c.command(json!({"type": "select_tissue", "preset": "ecoflex30"})).await;
    assert!(ack.accepted, "{ack:?}");
    assert_eq!(c.state().await.tissue, "ecoflex30");

    c.seq = 0;
    let stale = c.command(json!({"type": "pause"})).await;
    assert!(!stale.accepted && stale.sequence_number == 1, "{stale:?}");

    let bad = reqwest::Client::new()
        .post(format!("{}/command", c.base))
        .header("content-type", "application/json")
        .body("{\"kind\": 3}")
        .send()
        .await
        .unwrap();
    assert_eq!(bad.status(), reqwest::StatusCode::BAD_REQUEST);
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn jog_clamps_at_the_end_of_the_stroke() {
    let mut cfg = config();
    cfg.time_scale = 0.5;
    let service = Service::start(cfg).await.unwrap();
    let mut c = Client::new(&service);
    assert!(c.command(json!({"type": "probe", "target_mm": 34.8})).await.accepted);
    c.wait_until("34.8 mm", |s| !s.moving && (s.latest.pos - 34.8).abs() < 0.01).await;
    assert!(c.command(json!({"type": "jog", "delta_mm": 1.0})).await.accepted);
    let s = c.wait_until("35 mm", |s| !s.moving && s.latest.pos > 34.99).await;
    assert!(s.latest.pos <= 35.0 && s.latest.cmd_pos <= 35.0);
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn pause_freezes_time() {
    let service = Service::start(config()).await.unwrap();
    let mut c = Client::new(&service);
    assert!(c.command(json!({"type": "pause"})).await.accepted);
    let t0 = c.state().await.latest.t;
    tokio::time::sleep(Duration::from_millis(200)).await;
    let s = c.state().await;
    assert!(s.paused);
    assert_eq!(s.latest.t, t0);
    assert!(c.command(json!({"type": "resume"})).await.accepted);
    c.wait_until("time to advance", |s| s.latest.t > t0 + 0.1).await;
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn frame_and_presets() {
    let service = Service::start(config()).await.unwrap();
    let c = Client::new(&service);
    let png = c.http.get(format!("{}/frame", c.base)).send().await.unwrap();
    assert_eq!(png.headers()["content-type"], "image/png");
    assert_eq!(&png.bytes().await.unwrap()[..4], b"\x89PNG");
    let pgm = c.http.get(format!("{}/frame?format=pgm", c.base)).send().await.unwrap();
    assert_eq!(&pgm.bytes().await.unwrap()[..2], b"P5");
    let bad = c.http.get(format!("{}/frame?format=gif", c.base)).send().await.unwrap();
    assert_eq!(bad.status(), reqwest::StatusCode::BAD_REQUEST);
    let presets: Vec<Value> = c
        .http
        .get(format!("{}/presets", c.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let names: Vec<&str> = presets.iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["ecoflex10", "ecoflex30"]);
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn telemetry_messages_follow_the_contract() {
    let service = Service::start(config()).await.unwrap();
    let mut ws = subscribe(&service).await;
    let mut prev = f64::MIN;
    for _ in 0..25 {
        let v = text(ws.next().await.unwrap().unwrap()).unwrap();
        let keys: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, FIELDS.into_iter().collect());
        assert_eq!(v["class_probs"].as_array().unwrap().len(), 4);
        let t = v["t"].as_f64().unwrap();
        assert!(t > prev);
        // 50 Hz at 1 kHz simulation: one message every 20 steps.
        assert!(prev == f64::MIN || ((t - prev) - 0.02).abs() < 1e-9, "{prev} -> {t}");
        prev = t;
    }
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn two_subscribers_see_the_same_stream() {
    let service = Service::start(config()).await.unwrap();
    let mut a = subscribe(&service).await;
    let mut b = subscribe(&service).await;
    let c = Client::new(&service);
    c.wait_until("two clients", |s| s.connected_clients == 2).await;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..60 {
        xs.push(text(a.next().await.unwrap().unwrap()).unwrap());
        ys.push(text(b.next().await.unwrap().unwrap()).unwrap());
    }
    let t0 = xs[0]["t"].as_f64().unwrap().max(ys[0]["t"].as_f64().unwrap());
    let xs: Vec<_> = xs.into_iter().filter(|v| v["t"].as_f64().unwrap() >= t0).collect();
    let ys: Vec<_> = ys.into_iter().filter(|v| v["t"].as_f64().unwrap() >= t0).collect();
    let n = xs.len().min(ys.len());
    assert!(n > 40);
    assert_eq!(xs[..n], ys[..n]);
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn stalled_subscriber_is_dropped_without_slowing_the_simulation() {
    let mut cfg = config();
    cfg.experiment.vision.enabled = false;
    cfg.telemetry_hz = 1000.0;
    cfg.backlog = 32;
    cfg.stall_timeout_s = 0.2;
    let service = Service::start(cfg).await.unwrap();
    let c = Client::new(&service);
    let mut ws = subscribe(&service).await;
    c.wait_until("subscriber", |s| s.connected_clients == 1).await;
    let wall = Instant::now();
    let t0 = c.state().await.latest.t;
    // Never read: the socket fills up and the server must give up on us.
    let dropped = c.wait_until("drop", |s| s.connected_clients == 0).await;
    let elapsed = wall.elapsed().as_secs_f64();
    assert!(
        dropped.latest.t - t0 > 0.5 * elapsed,
        "simulation stalled: {} s simulated in {elapsed} s",
        dropped.latest.t - t0
    );

    let mut prev = f64::MIN;
    let mut reason = None;
    while let Some(Ok(m)) = ws.next().await {
        match m {
            Message::Text(t) => {
                let v: Value = serde_json::from_str(t.as_str()).unwrap();
                let t = v["t"].as_f64().unwrap();
                assert!(t > prev, "out of order: {prev} then {t}");
                prev = t;
            }
            Message::Close(frame) => {
                reason = frame;
                break;
            }
            _ => {}
        }
    }
    let frame = reason.expect("close frame with a reason");
    assert_eq!(frame.code, CloseCode::Policy);
    assert_eq!(frame.reason.as_str(), "telemetry backlog exceeded");
    service.shutdown().await.unwrap();
}

#[tokio::test]
async fn shutdown_closes_subscribers() {
    let service = Service::start(config()).await.unwrap();
    let mut ws = subscribe(&service).await;
    let _ = ws.next().await.unwrap().unwrap();
    let stop = tokio::spawn(service.shutdown());
    let mut close = None;
    while let Some(Ok(m)) = ws.next().await {
        if let Message::Close(f) = m {
            close = f;
            break;
        }
    }
    assert_eq!(close.unwrap().code, CloseCode::Away);
    stop.await.unwrap().unwrap();
}

#[tokio::test]
async fn config_errors_come_before_bind() {
    let mut cfg = config();
    cfg.time_scale = -1.0;
    assert!(matches!(Service::start(cfg).await, Err(TeleopError::Config(_))));

    let taken = Service::start(config()).await.unwrap();
    let clash = ServeConfig {
        addr: taken.local_addr(),
        ..ServeConfig::default()
    };
    let e = Service::start(clash).await.unwrap_err();
    assert!(matches!(e, TeleopError::Bind { .. }) && !e.is_validation());
    taken.shutdown().await.unwrap();
}
