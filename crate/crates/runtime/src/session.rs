//! Playback state: the active trajectory, the playhead and hot swaps.

use std::sync::Arc;

use choreo_core::platform::{forward_kinematics, JointConfig};
use choreo_core::score::ScoreOp;
use choreo_core::synth::Trajectory;
use serde::{Deserialize, Serialize};

use crate::compile::{CompileReport, Compiler};
use crate::wire::{ClientMsg, ControlOp, FrameMsg, StateMsg};

/// Length of the blend into a newly swapped trajectory.
pub const CROSSFADE_SECONDS: f64 = 0.2;
/// Crossfades never take fewer frames than this, which bounds the per-frame
/// joint step to a tenth of the widest joint range.
pub const MIN_CROSSFADE_FRAMES: usize = 10;
/// A `state` message accompanies every this many frames.
pub const STATE_EVERY: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Playing,
    Paused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub mode: Mode,
    pub tempo_multiplier: f64,
    pub playhead: f64,
    pub trajectory_id: Option<u64>,
}

/// New playhead after swapping trajectories: the same fraction of the way
/// through.
pub fn hot_swap(old: &Trajectory, new: &Trajectory, playhead: f64) -> f64 {
    let (old_end, new_end) = (old.end_time(), new.end_time());
    if old_end <= 0.0 {
        return 0.0;
    }
    (playhead / old_end).clamp(0.0, 1.0) * new_end
}

/// Configuration at `time`, interpolated between the two nearest frames.
pub fn sample(traj: &Trajectory, time: f64) -> (JointConfig, Option<usize>) {
    let frames = &traj.frames;
    let last = frames.len() - 1;
    let x = (time * traj.rate).clamp(0.0, last as f64);
    let i = (x.floor() as usize).min(last);
    let j = (i + 1).min(last);
    let u = x - i as f64;
    let q = if u == 0.0 || i == j {
        frames[i].q.clone()
    } else {
        frames[i].q.lerp(&frames[j].q, u)
    };
    let index = if u < 0.5 { frames[i].trace_index } else { frames[j].trace_index };
    (q, index)
}

#[derive(Debug, Clone)]
struct Crossfade {
    from: JointConfig,
    step: usize,
    frames: usize,
}

/// Frames emitted by [`Session::tick`] while playing.
pub struct Tick {
    pub frame: FrameMsg,
    /// Set every [`STATE_EVERY`] frames.
    pub state_due: bool,
}

/// A live session. One owner drives it; nothing here is shared.
pub struct Session {
    compiler: Compiler,
    source: Option<String>,
    ops: Vec<ScoreOp>,
    trajectory: Option<Arc<Trajectory>>,
    trajectory_id: u64,
    mode: Mode,
    multiplier: f64,
    playhead: f64,
    emitted: u64,
    crossfade: Option<Crossfade>,
    /// Playhead and pose of the last emitted frame.
    shown: Option<(f64, JointConfig)>,
    last_report: Option<CompileReport>,
}

impl Session {
    pub fn new(compiler: Compiler) -> Self {
        Session {
            compiler,
            source: None,
            ops: Vec::new(),
            trajectory: None,
            trajectory_id: 0,
            mode: Mode::Playing,
            multiplier: 1.0,
            playhead: 0.0,
            emitted: 0,
            crossfade: None,
            shown: None,
            last_report: None,
        }
    }

    pub fn compiler(&self) -> &Compiler {
        &self.compiler
    }

    pub fn rate(&self) -> f64 {
        self.compiler.rate
    }

    pub fn trajectory(&self) -> Option<&Arc<Trajectory>> {
        self.trajectory.as_ref()
    }

    pub fn trajectory_id(&self) -> Option<u64> {
        self.trajectory.as_ref().map(|_| self.trajectory_id)
    }

    pub fn last_report(&self) -> Option<&CompileReport> {
        self.last_report.as_ref()
    }

    pub fn ops(&self) -> &[ScoreOp] {
        &self.ops
    }

    pub fn in_crossfade(&self) -> bool {
        self.crossfade.is_some()
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            mode: self.mode,
            tempo_multiplier: self.multiplier,
            playhead: self.playhead,
            trajectory_id: self.trajectory_id(),
        }
    }

    pub fn state_msg(&self) -> StateMsg {
        StateMsg {
            mode: self.mode,
            tempo_multiplier: self.multiplier,
            playhead: self.playhead,
            duration: self.duration(),
            trajectory_id: self.trajectory_id(),
        }
    }

    fn duration(&self) -> f64 {
        self.trajectory.as_ref().map_or(0.0, |t| t.end_time())
    }

    /// Recompiles from new score text. A failed compile leaves the current
    /// trajectory playing.
    pub fn load_source(&mut self, text: String) -> CompileReport {
        self.source = Some(text);
        self.recompile()
    }

    /// Records a failure that happened before compiling, e.g. an unreadable
    /// file.
    pub fn report_failure(&mut self, report: CompileReport) {
        self.last_report = Some(report);
    }

    fn recompile(&mut self) -> CompileReport {
        let text = self.source.clone().unwrap_or_default();
        let (report, compiled) = self.compiler.compile(&text, &self.ops);
        if let Some(c) = compiled {
            self.swap(Arc::new(c.trajectory));
        }
        self.last_report = Some(report.clone());
        report
    }

    /// Installs a new trajectory at the proportional playhead, blending from
    /// the pose currently shown.
    pub fn swap(&mut self, new: Arc<Trajectory>) {
        if let Some(old) = self.trajectory.take() {
            let (at, from) = match self.shown.take() {
                Some(shown) => shown,
                None => (self.playhead, self.current_pose(&old)),
            };
            self.playhead = hot_swap(&old, &new, at);
            self.start_crossfade(from);
        } else {
            self.playhead = 0.0;
        }
        self.trajectory = Some(new);
        self.trajectory_id += 1;
    }

    fn crossfade_frames(&self) -> usize {
        ((CROSSFADE_SECONDS * self.rate()).round() as usize).max(MIN_CROSSFADE_FRAMES)
    }

    fn start_crossfade(&mut self, from: JointConfig) {
        self.crossfade = Some(Crossfade {
            from,
            step: 0,
            frames: self.crossfade_frames(),
        });
    }

    /// The pose that would be shown now on `traj`, including any blend in
    /// progress.
    fn current_pose(&self, traj: &Trajectory) -> JointConfig {
        let (target, _) = sample(traj, self.playhead);
        match &self.crossfade {
            Some(cf) => cf.from.lerp(&target, cf.step as f64 / cf.frames as f64),
            None => target,
        }
    }

    pub fn handle_control(&mut self, msg: ClientMsg) -> Result<(SessionState, Option<CompileReport>), String> {
        let ClientMsg::Control { op, value } = msg;
        let mut report = None;
        match op {
            ControlOp::Play => self.mode = Mode::Playing,
            ControlOp::Pause => self.mode = Mode::Paused,
            ControlOp::Seek => {
                let t = value
                    .as_f64()
                    .filter(|t| t.is_finite())
                    .ok_or("seek expects a number of seconds")?;
                let end = self.duration();
                if t >= end {
                    self.playhead = end;
                    self.mode = Mode::Paused;
                } else {
                    self.playhead = t.max(0.0);
                }
                self.crossfade = None;
                self.shown = None;
            }
            ControlOp::Tempo => {
                let k = value
                    .as_f64()
                    .filter(|k| k.is_finite() && *k > 0.0)
                    .ok_or("tempo expects a positive multiplier")?;
                self.multiplier = k;
            }
            ControlOp::ApplyTransform => {
                let text = value.as_str().ok_or("apply_transform expects a string")?;
                let op: ScoreOp = text.parse()?;
                self.ops.push(op);
                report = Some(self.recompile());
            }
        }
        Ok((self.state(), report))
    }

    /// Advances one frame period. Returns nothing while paused or before the
    /// first good compile.
    pub fn tick(&mut self) -> Option<Tick> {
        if self.mode == Mode::Paused {
            return None;
        }
        let traj = self.trajectory.clone()?;
        let at = self.playhead;
        let (target, trace_index) = sample(&traj, at);
        let (q, blend) = match &mut self.crossfade {
            Some(cf) => {
                cf.step += 1;
                let u = cf.step as f64 / cf.frames as f64;
                let q = cf.from.lerp(&target, u);
                if cf.step >= cf.frames {
                    self.crossfade = None;
                }
                (q, Some(u))
            }
            None => {
                self.playhead += self.multiplier / self.rate();
                if self.playhead > traj.end_time() {
                    // Loop, blending from the last pose back to the start.
                    self.playhead = 0.0;
                    self.start_crossfade(target.clone());
                }
                (target, None)
            }
        };
        self.shown = Some((at, q.clone()));
        let endpoints = forward_kinematics(&self.compiler.spec, &q)
            .map(|e| e.iter().map(|v| [v.x, v.y, v.z]).collect())
            .unwrap_or_default();
        let t = self.emitted as f64 / self.rate();
        self.emitted += 1;
        Some(Tick {
            frame: FrameMsg {
                trajectory_id: self.trajectory_id,
                t,
                q: q.0,
                endpoints,
                trace_index,
                blend,
            },
            state_due: self.emitted.is_multiple_of(STATE_EVERY),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use choreo_core::platform::{EclKey, Ecl, PlatformSpec};
    use choreo_core::score::Reach;
    use serde_json::json;

    fn compiler() -> Compiler {
        let spec = PlatformSpec::from_json_str(
            r#"{"format": 1, "name": "two",
            "links": [
                {"name": "a", "axis": [0,0,1], "length": 1, "limits": [-3, 3]},
                {"name": "b", "parent": "a", "axis": [0,0,1], "length": 1, "limits": [-2, 2]}
            ],
            "labels": {"arm": ["a", "b"]}}"#,
        )
        .unwrap();
        let mut ecl = Ecl::new("two");
        for (d, q) in [("fwd_mid", [1.0, -0.5]), ("back_mid", [-3.0, 2.0]), ("left_mid", [3.0, 0.0])] {
            ecl.entries.insert(EclKey::new("arm", d.parse().unwrap(), Reach::Mid), JointConfig(q.to_vec()));
        }
        Compiler::new(spec, ecl, 10.0)
    }

    const SCORE: &str = "phrase p {\n  arm -> fwd_mid for 2\n  arm -> back_mid for 2\n}\nplay p\n";

    fn control(op: &str, value: serde_json::Value) -> ClientMsg {
        serde_json::from_value(json!({"type": "control", "op": op, "value": value})).unwrap()
    }

    #[test]
    fn proportional_playhead() {
        let mut s = Session::new(compiler());
        assert!(s.load_source(SCORE.into()).ok);
        for _ in 0..21 {
            s.tick();
        }
        // The last frame shown was at 2.0 s of 4.
        assert!((s.playhead - 2.1).abs() < 1e-9);
        let slower = SCORE.replace("for 2", "for 4");
        assert!(s.load_source(slower).ok);
        assert!((s.playhead - 4.0).abs() < 1e-9);
        assert_eq!(s.trajectory_id(), Some(2));
    }

    #[test]
    fn identical_swap_does_not_move() {
        let mut s = Session::new(compiler());
        s.load_source(SCORE.into());
        for _ in 0..13 {
            s.tick();
        }
        let before = JointConfig(s.tick().unwrap().frame.q);
        s.load_source(SCORE.into());
        let first = s.tick().unwrap().frame;
        assert_eq!(first.blend, Some(0.1));
        assert_eq!(JointConfig(first.q), before);
    }

    #[test]
    fn crossfade_steps_are_bounded() {
        let mut s = Session::new(compiler());
        s.load_source(SCORE.into());
        for _ in 0..35 {
            s.tick();
        }
        let mut prev = JointConfig(s.tick().unwrap().frame.q);
        // Swap to a far-away pose.
        s.load_source("phrase p { arm -> left_mid for 4 }\nplay p".into());
        let bound = 6.0 / 10.0;
        let mut blended = 0;
        loop {
            let f = s.tick().unwrap().frame;
            let q = JointConfig(f.q);
            assert!(q.max_delta(&prev) <= bound + 1e-12);
            prev = q;
            if f.blend.is_none() {
                break;
            }
            blended += 1;
        }
        assert_eq!(blended, MIN_CROSSFADE_FRAMES);
    }

    #[test]
    fn syntax_error_keeps_playing() {
        let mut s = Session::new(compiler());
        s.load_source(SCORE.into());
        s.tick();
        let r = s.load_source("phrase p { arm -> fwd_mid for }".into());
        assert!(!r.ok);
        assert_eq!(r.diagnostics[0].span.unwrap().line, 1);
        assert_eq!(s.trajectory_id(), Some(1));
        assert_eq!(s.tick().unwrap().frame.trajectory_id, 1);
    }

    #[test]
    fn pause_play_and_seek() {
        let mut s = Session::new(compiler());
        s.load_source(SCORE.into());
        s.tick();
        s.tick();
        s.handle_control(control("pause", json!(null))).unwrap();
        let at = s.playhead;
        assert!(s.tick().is_none());
        s.handle_control(control("play", json!(null))).unwrap();
        assert_eq!(s.playhead, at);
        let (state, _) = s.handle_control(control("seek", json!(99))).unwrap();
        assert_eq!(state.mode, Mode::Paused);
        assert_eq!(state.playhead, 4.0);
        assert!(s.handle_control(control("seek", json!("soon"))).is_err());
        assert_eq!(s.state().playhead, 4.0);
    }

    #[test]
    fn tempo_doubles_the_advance() {
        let mut s = Session::new(compiler());
        s.load_source(SCORE.into());
        s.tick();
        let a = s.playhead;
        s.handle_control(control("tempo", json!(2.0))).unwrap();
        s.tick();
        assert!((s.playhead - a - 0.2).abs() < 1e-12);
        assert!(s.handle_control(control("tempo", json!(0))).is_err());
        assert_eq!(s.state().tempo_multiplier, 2.0);
    }

    #[test]
    fn retrograde_control_reverses_the_trace() {
        let mut s = Session::new(compiler());
        let before = s.load_source(SCORE.into()).trace.unwrap();
        let (_, report) = s.handle_control(control("apply_transform", json!("retrograde"))).unwrap();
        let mut after = report.unwrap().trace.unwrap();
        after.0.reverse();
        assert_eq!(after, before);
        assert!(s.handle_control(control("apply_transform", json!("twirl"))).is_err());
        assert_eq!(s.ops().len(), 1);
    }

    #[test]
    fn frame_times_are_monotone_across_loops() {
        let mut s = Session::new(compiler());
        s.load_source("phrase p { arm -> fwd_mid for 1/2 }\nplay p".into());
        let mut last = -1.0;
        for _ in 0..60 {
            let f = s.tick().unwrap().frame;
            assert!(f.t > last);
            last = f.t;
        }
    }
}
