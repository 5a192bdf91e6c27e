//! The line protocol: one JSON object per line, the same objects over TCP and
//! WebSocket.

use choreo_core::diag::Diagnostic;
use choreo_core::platform::PlatformSpec;
use serde::{Deserialize, Serialize};

use crate::session::Mode;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMsg {
    Hello {
        platform: PlatformSpec,
        rate: f64,
    },
    Compile {
        ok: bool,
        latency_ms: f64,
        diagnostics: Vec<Diagnostic>,
        /// Id of the trajectory now playing; unchanged after a failed compile.
        trajectory_id: Option<u64>,
        trace_length: usize,
    },
    Frame(FrameMsg),
    State(StateMsg),
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMsg {
    pub trajectory_id: u64,
    /// Session seconds; strictly increasing across the session.
    pub t: f64,
    pub q: Vec<f64>,
    /// Distal endpoint of every link, metres.
    pub endpoints: Vec<[f64; 3]>,
    pub trace_index: Option<usize>,
    /// Present only inside a crossfade: progress from the previous pose
    /// (0) to the new trajectory (1).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub blend: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub mode: Mode,
    pub tempo_multiplier: f64,
    pub playhead: f64,
    pub duration: f64,
    pub trajectory_id: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlOp {
    Play,
    Pause,
    Seek,
    Tempo,
    ApplyTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMsg {
    Control {
        op: ControlOp,
        #[serde(default)]
        value: serde_json::Value,
    },
}

impl ServerMsg {
    /// The wire form, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

pub fn parse_client(line: &str) -> Result<ClientMsg, String> {
    serde_json::from_str(line).map_err(|e| format!("malformed message: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn control_messages() {
        assert_eq!(
            parse_client(r#"{"type":"control","op":"tempo","value":2}"#),
            Ok(ClientMsg::Control {
                op: ControlOp::Tempo,
                value: serde_json::json!(2)
            })
        );
        assert_eq!(
            parse_client(r#"{"type":"control","op":"play"}"#),
            Ok(ClientMsg::Control {
                op: ControlOp::Play,
                value: serde_json::Value::Null
            })
        );
        assert!(parse_client(r#"{"type":"control","op":"jump"}"#).is_err());
        assert!(parse_client("not json").is_err());
    }

    #[test]
    fn frame_line_shape() {
        let f = ServerMsg::Frame(FrameMsg {
            trajectory_id: 3,
            t: 0.5,
            q: vec![0.25],
            endpoints: vec![[1.0, 0.0, 0.0]],
            trace_index: Some(0),
            blend: None,
        });
        assert_eq!(
            f.to_line(),
            r#"{"type":"frame","trajectory_id":3,"t":0.5,"q":[0.25],"endpoints":[[1.0,0.0,0.0]],"trace_index":0}"#
        );
    }

    #[test]
    fn error_line_shape() {
        let e = ServerMsg::Error {
            message: "bad".into(),
        };
        assert_eq!(e.to_line(), r#"{"type":"error","message":"bad"}"#);
    }
}
