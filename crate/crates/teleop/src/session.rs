use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tissuebench_core::harness::Rig;
use tissuebench_core::plant::TissueModel;
use tokio::sync::{broadcast, oneshot, watch};

use crate::command::{Ack, Command, CommandKind, BUSY};
use crate::wire::TelemetryMessage;
use crate::{ServeConfig, TeleopError};

/// Wall-clock period of the pacing loop.
const TICK: Duration = Duration::from_millis(5);
/// Steps one tick may run before the loop gives up catching up with the clock.
const MAX_STEPS_PER_TICK: u64 = 2000;

/// Snapshot served by `GET /state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    /// Preset name, or `inline` for a tissue given in the configuration.
    pub tissue: String,
    pub moving: bool,
    pub paused: bool,
    pub time_scale: f64,
    pub connected_clients: usize,
    pub latest: TelemetryMessage,
}

pub(crate) enum Request {
    Command {
        cmd: Command,
        /// Resolved off the simulation thread for `select_tissue`.
        tissue: Option<Result<TissueModel, String>>,
        ack: oneshot::Sender<Ack>,
    },
    Shutdown,
}

pub(crate) struct Session {
    rig: Rig,
    stroke_mm: f64,
    time_scale: f64,
    decimation: u64,
    steps: u64,
    tissue_label: String,
    paused: bool,
    last_seq: HashMap<String, u64>,
    latest: TelemetryMessage,
    telemetry: broadcast::Sender<Arc<TelemetryMessage>>,
    state: watch::Sender<SessionState>,
    clients: Arc<AtomicUsize>,
}

impl Session {
    pub(crate) fn new(
        cfg: &ServeConfig,
        telemetry: broadcast::Sender<Arc<TelemetryMessage>>,
        clients: Arc<AtomicUsize>,
    ) -> Result<(Self, watch::Receiver<SessionState>), TeleopError> {
        let (rig, first) = Rig::start(&cfg.experiment)?;
        let latest = TelemetryMessage::new(&first, rig.last_analysis());
        let tissue_label = cfg.experiment.tissue.label();
        let (state, state_rx) = watch::channel(SessionState {
            tissue: tissue_label.clone(),
            moving: false,
            paused: false,
            time_scale: cfg.time_scale,
            connected_clients: 0,
            latest: latest.clone(),
        });
        Ok((
            Self {
                rig,
                stroke_mm: cfg.experiment.drivetrain.stroke_mm,
                time_scale: cfg.time_scale,
                decimation: cfg.decimation(),
                steps: 0,
                tissue_label,
                paused: false,
                last_seq: HashMap::new(),
                latest,
                telemetry,
                state,
                clients,
            },
            state_rx,
        ))
    }

    /// Paces the rig against the wall clock until shut down.
    pub(crate) fn run(mut self, requests: Receiver<Request>) {
        let mut clock = Instant::now();
        let mut sim_origin = self.rig.time();
        let mut next_tick = clock + TICK;
        loop {
            let wait = next_tick.saturating_duration_since(Instant::now());
            match requests.recv_timeout(wait) {
                Ok(Request::Command { cmd, tissue, ack }) => {
                    let was_paused = self.paused;
                    let reply = self.handle(&cmd, tissue);
                    let _ = ack.send(reply);
                    if was_paused && !self.paused {
                        clock = Instant::now();
                        sim_origin = self.rig.time();
                    }
                    self.publish();
                    continue;
                }
                Ok(Request::Shutdown) | Err(RecvTimeoutError::Disconnected) => return,
                Err(RecvTimeoutError::Timeout) => {}
            }
            next_tick += TICK;
            if self.paused {
                continue;
            }
            let target = sim_origin + clock.elapsed().as_secs_f64() / self.time_scale;
            let dt = self.rig.plant().dt();
            let mut budget = MAX_STEPS_PER_TICK;
            while self.rig.time() + 0.5 * dt <= target && budget > 0 {
                if let Err(e) = self.step() {
                    tracing::error!("simulation stopped: {e}");
                    self.paused = true;
                    break;
                }
                budget -= 1;
            }
            if budget == 0 {
                // Too slow for the requested pace; continue from here.
                tracing::warn!("simulation fell behind the wall clock");
                clock = Instant::now();
                sim_origin = self.rig.time();
                next_tick = clock + TICK;
            }
            self.publish();
        }
    }

    fn step(&mut self) -> Result<(), TeleopError> {
        let s = self.rig.step()?;
        self.steps += 1;
        if self.steps % self.decimation == 0 {
            self.latest = TelemetryMessage::new(&s, self.rig.last_analysis());
            // No subscribers is not an error.
            let _ = self.telemetry.send(Arc::new(self.latest.clone()));
        }
        Ok(())
    }

    fn publish(&self) {
        self.state.send_replace(SessionState {
            tissue: self.tissue_label.clone(),
            moving: self.rig.is_moving(),
            paused: self.paused,
            time_scale: self.time_scale,
            connected_clients: self.clients.load(Ordering::Relaxed),
            latest: self.latest.clone(),
        });
    }

    pub(crate) fn handle(&mut self, cmd: &Command, tissue: Option<Result<TissueModel, String>>) -> Ack {
        let t = self.rig.time();
        if let Some(&last) = self.last_seq.get(&cmd.client_id) {
            if cmd.sequence_number <= last {
                return Ack::reject(
                    cmd,
                    format!("sequence number {} does not follow {last}", cmd.sequence_number),
                    t,
                );
            }
        }
        self.last_seq.insert(cmd.client_id.clone(), cmd.sequence_number);
        if let Err(reason) = cmd.check(self.stroke_mm) {
            return Ack::reject(cmd, reason, t);
        }
        let moving = self.rig.is_moving();
        let result = match &cmd.kind {
            CommandKind::Probe { .. } | CommandKind::Jog { .. } | CommandKind::SelectTissue { .. } | CommandKind::SetProfile(_)
                if moving =>
            {
                Err(BUSY.to_string())
            }
            CommandKind::Probe { target_mm } => self.rig.command_move(*target_mm).map_err(|e| e.to_string()),
            CommandKind::Jog { delta_mm } => {
                let plant = self.rig.plant();
                let pos = plant.drivetrain().quantize(plant.sample().position_mm);
                let target = (pos + delta_mm).clamp(0.0, self.stroke_mm);
                self.rig.command_move(target).map_err(|e| e.to_string())
            }
            CommandKind::Retract => self.rig.command_move(0.0).map_err(|e| e.to_string()),
            CommandKind::SelectTissue { preset } => match tissue {
                Some(Ok(model)) => self.rig.set_tissue(model).map_err(|e| e.to_string()).map(|()| {
                    self.tissue_label = preset.clone();
                }),
                Some(Err(reason)) => Err(reason),
                None => Err(format!("unknown tissue preset `{preset}`")),
            },
            CommandKind::SetProfile(p) => self.rig.set_profile(*p).map_err(|e| e.to_string()),
            CommandKind::Pause => {
                self.paused = true;
                Ok(())
            }
            CommandKind::Resume => {
                self.paused = false;
                Ok(())
            }
        };
        match result {
            Ok(()) => Ack::accept(cmd, t),
            Err(reason) => Ack::reject(cmd, reason, t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        let mut cfg = ServeConfig::default();
        cfg.experiment.vision.enabled = false;
        let (tx, _) = broadcast::channel(4);
        Session::new(&cfg, tx, Arc::default()).unwrap().0
    }

    fn cmd(seq: u64, kind: CommandKind) -> Command {
        Command {
            client_id: "op".into(),
            sequence_number: seq,
            kind,
        }
    }

    #[test]
    fn probe_then_busy() {
        let mut s = session();
        assert!(s.handle(&cmd(1, CommandKind::Probe { target_mm: 20.0 }), None).accepted);
        let busy = s.handle(&cmd(2, CommandKind::Probe { target_mm: 10.0 }), None);
        assert_eq!(busy.reason.as_deref(), Some(BUSY));
        assert!(s.handle(&cmd(3, CommandKind::Retract), None).accepted);
    }

    #[test]
    fn stale_sequence_numbers_are_rejected() {
        let mut s = session();
        assert!(s.handle(&cmd(5, CommandKind::Pause), None).accepted);
        let ack = s.handle(&cmd(5, CommandKind::Resume), None);
        assert!(!ack.accepted && ack.sequence_number == 5);
        let other = Command {
            client_id: "other".into(),
            ..cmd(1, CommandKind::Resume)
        };
        assert!(s.handle(&other, None).accepted);
    }

    #[test]
    fn jog_clamps_to_stroke() {
        let mut s = session();
        assert!(s.handle(&cmd(1, CommandKind::Probe { target_mm: 34.8 }), None).accepted);
        while s.rig.is_moving() {
            s.step().unwrap();
        }
        assert!(s.handle(&cmd(2, CommandKind::Jog { delta_mm: 1.0 }), None).accepted);
        while s.rig.is_moving() {
            s.step().unwrap();
        }
        assert_eq!(s.rig.plant().state().commanded_target_mm, 35.0);
        assert!((s.rig.plant().sample().position_mm - 35.0).abs() < 0.01);
    }
}
