use serde::{Deserialize, Serialize};
use tissuebench_core::plant::MotionProfile;

/// Reason given when a motion command arrives while the tool is moving.
pub const BUSY: &str = "busy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CommandKind {
    /// Relative move, clamped to the stroke.
    Jog { delta_mm: f64 },
    Probe { target_mm: f64 },
    /// Back to 0 mm. Accepted while moving and replaces the current move.
    Retract,
    SelectTissue { preset: String },
    SetProfile(MotionProfile),
    Pause,
    Resume,
}

/// Operator command.
///
/// ```json
/// {"client_id": "console", "sequence_number": 7, "kind": {"type": "probe", "target_mm": 20}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub client_id: String,
    /// Must increase with every command from the same client.
    pub sequence_number: u64,
    pub kind: CommandKind,
}

impl Command {
    /// Checks that need no session state.
    pub(crate) fn check(&self, stroke_mm: f64) -> Result<(), String> {
        match &self.kind {
            CommandKind::Probe { target_mm } => {
                if !target_mm.is_finite() {
                    Err("target must be a finite number".into())
                } else if *target_mm > stroke_mm {
                    Err(format!("target exceeds {stroke_mm} mm stroke"))
                } else if *target_mm < 0.0 {
                    Err("target is below 0 mm".into())
                } else {
                    Ok(())
                }
            }
            CommandKind::Jog { delta_mm } if !delta_mm.is_finite() => Err("jog must be a finite number".into()),
            CommandKind::SetProfile(p) => p.validate().map_err(|e| e.to_string()),
            _ => Ok(()),
        }
    }
}

/// Outcome of one command. `reason` is present only on rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub client_id: String,
    pub sequence_number: u64,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Simulation time at which the command was handled, s.
    pub t: f64,
}

impl Ack {
    pub(crate) fn accept(cmd: &Command, t: f64) -> Self {
        Self {
            client_id: cmd.client_id.clone(),
            sequence_number: cmd.sequence_number,
            accepted: true,
            reason: None,
            t,
        }
    }

    pub(crate) fn reject(cmd: &Command, reason: impl Into<String>, t: f64) -> Self {
        Self {
            accepted: false,
            reason: Some(reason.into()),
            ..Self::accept(cmd, t)
        }
    }
}
