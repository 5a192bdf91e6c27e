//! Live-coding daemon: watches a score, recompiles on save, streams frames
//! and takes steering commands from connected clients.

pub mod compile;
pub mod session;
pub mod wire;

pub use compile::{CompileReport, Compiler};
pub use session::{hot_swap, sample, Mode, Session, SessionState};
pub use wire::{ClientMsg, ControlOp, FrameMsg, ServerMsg, StateMsg};
pub mod server;

pub use server::{serve, ServeConfig, ServeError, ServerHandle, UiAssets, DEBOUNCE};
