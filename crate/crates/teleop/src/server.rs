use std::future::Future;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tissuebench_core::plant::{preset, preset_names, Preset};
use tissuebench_core::vision::{render_frame, FrameFormat, SceneGeometry};
use tokio::sync::{broadcast, oneshot, watch};

use crate::command::{Command, CommandKind};
use crate::session::{Request, Session, SessionState};
use crate::wire::TelemetryMessage;
use crate::{ServeConfig, TeleopError};

/// Close code and reason sent to a subscriber that fell behind.
const BACKLOG_CLOSE: (u16, &str) = (1008, "telemetry backlog exceeded");
const SHUTDOWN_CLOSE: (u16, &str) = (1001, "server shutting down");
/// How long a dropped subscriber gets to take its close frame.
const CLOSE_GRACE: Duration = Duration::from_secs(10);

#[derive(Clone)]
struct AppState {
    requests: mpsc::Sender<Request>,
    state: watch::Receiver<SessionState>,
    telemetry: broadcast::Sender<Arc<TelemetryMessage>>,
    clients: Arc<AtomicUsize>,
    geometry: SceneGeometry,
    stall_timeout: Duration,
    shutdown: watch::Receiver<bool>,
}

/// Counts a websocket subscriber for as long as it is alive.
struct ClientGuard(Arc<AtomicUsize>);

impl ClientGuard {
    fn new(clients: &Arc<AtomicUsize>) -> Self {
        clients.fetch_add(1, Ordering::Relaxed);
        Self(clients.clone())
    }
}

impl Drop for ClientGuard {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::Relaxed);
    }
}

/// A running service: HTTP server task plus simulation thread.
pub struct Service {
    addr: std::net::SocketAddr,
    stop: watch::Sender<bool>,
    requests: mpsc::Sender<Request>,
    server: tokio::task::JoinHandle<std::io::Result<()>>,
    sim: std::thread::JoinHandle<()>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service").field("addr", &self.addr).finish_non_exhaustive()
    }
}

impl Service {
    /// Validates `cfg`, binds, and starts the simulation. Configuration
    /// errors are reported before binding.
    pub async fn start(cfg: ServeConfig) -> Result<Self, TeleopError> {
        cfg.validate()?;
        let listener = tokio::net::TcpListener::bind(cfg.addr)
            .await
            .map_err(|source| TeleopError::Bind { addr: cfg.addr, source })?;
        let addr = listener.local_addr()?;

        let (telemetry, _) = broadcast::channel(cfg.backlog);
        let clients = Arc::new(AtomicUsize::new(0));
        let (session, state) = Session::new(&cfg, telemetry.clone(), clients.clone())?;
        let (requests, rx) = mpsc::channel();
        let sim = std::thread::Builder::new()
            .name("teleop-sim".into())
            .spawn(move || session.run(rx))?;
        let (stop, shutdown) = watch::channel(false);

        let app = router(AppState {
            requests: requests.clone(),
            state,
            telemetry,
            clients,
            geometry: cfg.experiment.vision.geometry.clone(),
            stall_timeout: cfg.stall_timeout(),
            shutdown: shutdown.clone(),
        });
        let mut signal = shutdown;
        let server = tokio::spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async move { stopped(&mut signal).await })
                .await
        });
        tracing::info!("listening on {addr}");
        Ok(Self {
            addr,
            stop,
            requests,
            server,
            sim,
        })
    }

    pub fn local_addr(&self) -> std::net::SocketAddr {
        self.addr
    }

    /// Closes subscribers, stops accepting requests and joins the simulation.
    pub async fn shutdown(self) -> Result<(), TeleopError> {
        let _ = self.stop.send(true);
        let served = self.server.await.map_err(|e| TeleopError::Io(std::io::Error::other(e)));
        let _ = self.requests.send(Request::Shutdown);
        let sim = self.sim;
        tokio::task::spawn_blocking(move || sim.join())
            .await
            .map_err(|e| TeleopError::Io(std::io::Error::other(e)))?
            .map_err(|_| TeleopError::SimulationPanicked)?;
        served??;
        Ok(())
    }
}

/// Runs the service until `signal` resolves, then shuts down cleanly.
pub async fn serve(cfg: ServeConfig, signal: impl Future<Output = ()>) -> Result<(), TeleopError> {
    let service = Service::start(cfg).await?;
    signal.await;
    service.shutdown().await
}

fn router(state: AppState) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/frame", get(get_frame))
        .route("/presets", get(get_presets))
        .route("/command", post(post_command))
        .route("/telemetry", get(telemetry_ws))
        .with_state(state)
}

async fn stopped(shutdown: &mut watch::Receiver<bool>) {
    let _ = shutdown.wait_for(|s| *s).await;
}

fn error_json(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

async fn get_state(State(app): State<AppState>) -> Json<SessionState> {
    let mut s = app.state.borrow().clone();
    s.connected_clients = app.clients.load(Ordering::Relaxed);
    Json(s)
}

async fn get_presets() -> Json<Vec<Preset>> {
    Json(preset_names().into_iter().filter_map(preset).collect())
}

#[derive(Debug, Deserialize)]
struct FrameQuery {
    format: Option<String>,
}

async fn get_frame(State(app): State<AppState>, Query(q): Query<FrameQuery>) -> Response {
    let format = match q.format.as_deref().unwrap_or("png").parse::<FrameFormat>() {
        Ok(f) => f,
        Err(e) => return error_json(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let pos = app.state.borrow().latest.pos;
    let geometry = app.geometry.clone();
    let encoded = tokio::task::spawn_blocking(move || render_frame(pos, &geometry)?.encode(format)).await;
    match encoded {
        Ok(Ok(bytes)) => {
            let mime = match format {
                FrameFormat::Png => "image/png",
                FrameFormat::Pgm => "image/x-portable-graymap",
            };
            ([(header::CONTENT_TYPE, mime)], bytes).into_response()
        }
        Ok(Err(e)) => error_json(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error_json(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn post_command(State(app): State<AppState>, body: Result<Json<Command>, JsonRejection>) -> Response {
    let Json(cmd) = match body {
        Ok(b) => b,
        Err(e) => return error_json(StatusCode::BAD_REQUEST, e.body_text()),
    };
    let tissue = match &cmd.kind {
        CommandKind::SelectTissue { preset: name } => {
            let name = name.clone();
            // Calibration can take a moment; keep it off the simulation thread.
            let resolved = tokio::task::spawn_blocking(move || {
                preset(&name)
                    .ok_or_else(|| format!("unknown tissue preset `{name}`"))?
                    .tissue()
                    .map_err(|e| e.to_string())
            })
            .await;
            match resolved {
                Ok(r) => Some(r),
                Err(e) => return error_json(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
            }
        }
        _ => None,
    };
    let (ack, reply) = oneshot::channel();
    if app.requests.send(Request::Command { cmd, tissue, ack }).is_err() {
        return error_json(StatusCode::SERVICE_UNAVAILABLE, "simulation is not running");
    }
    match reply.await {
        Ok(ack) => Json(ack).into_response(),
        Err(_) => error_json(StatusCode::SERVICE_UNAVAILABLE, "simulation is not running"),
    }
}

async fn telemetry_ws(State(app): State<AppState>, ws: WebSocketUpgrade) -> Response {
    let rx = app.telemetry.subscribe();
    let guard = ClientGuard::new(&app.clients);
    ws.on_upgrade(move |socket| forward(socket, rx, app.shutdown.clone(), app.stall_timeout, guard))
}

/// Relays telemetry to one subscriber until it leaves, falls behind or the
/// service stops.
async fn forward(
    mut socket: WebSocket,
    mut rx: broadcast::Receiver<Arc<TelemetryMessage>>,
    mut shutdown: watch::Receiver<bool>,
    stall_timeout: Duration,
    guard: ClientGuard,
) {
    let close = loop {
        tokio::select! {
            () = stopped(&mut shutdown) => break Some(SHUTDOWN_CLOSE),
            msg = rx.recv() => match msg {
                Ok(m) => {
                    let text = serde_json::to_string(&*m).expect("telemetry serializes");
                    match tokio::time::timeout(stall_timeout, socket.send(Message::Text(text.into()))).await {
                        Ok(Ok(())) => {}
                        Ok(Err(_)) => break None,
                        Err(_) => break Some(BACKLOG_CLOSE),
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    tracing::info!("dropping subscriber {n} messages behind");
                    break Some(BACKLOG_CLOSE);
                }
                Err(broadcast::error::RecvError::Closed) => break Some(SHUTDOWN_CLOSE),
            },
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break None,
                Some(Ok(_)) => {}
            },
        }
    };
    drop(rx);
    drop(guard);
    if let Some((code, reason)) = close {
        let frame = Message::Close(Some(CloseFrame {
            code,
            reason: reason.into(),
        }));
        if tokio::time::timeout(CLOSE_GRACE, socket.send(frame)).await.is_ok() {
            // Wait briefly for the client's close reply.
            let _ = tokio::time::timeout(Duration::from_secs(1), async {
                while let Some(Ok(m)) = socket.recv().await {
                    if matches!(m, Message::Close(_)) {
                        break;
                    }
                }
            })
            .await;
        }
    }
}
