//! Real-time probing session served over HTTP and WebSocket.
//!
//! One simulation thread owns the rig. Commands reach it through a queue and
//! are acknowledged one by one; telemetry leaves through a bounded broadcast
//! that drops subscribers who fall behind.
//!
//! | Route | |
//! |---|---|
//! | `GET /state` | [`SessionState`] |
//! | `GET /frame` | current top-view frame, PNG (`?format=pgm` for PGM) |
//! | `GET /presets` | shipped tissue presets |
//! | `POST /command` | [`Command`] in, [`Ack`] out |
//! | `GET /telemetry` | WebSocket stream of [`TelemetryMessage`] |

mod command;
mod config;
mod error;
mod server;
mod session;
mod wire;

pub use command::{Ack, Command, CommandKind, BUSY};
pub use config::ServeConfig;
pub use error::TeleopError;
pub use server::{serve, Service};
pub use session::SessionState;
pub use wire::TelemetryMessage;
