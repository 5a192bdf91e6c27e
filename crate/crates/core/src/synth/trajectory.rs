use serde::{Serialize, Serializer};
use thiserror::Error;

use super::flatten::{flatten_with_warnings, FlattenError, SymbolicTrace, TraceEntry};
use super::profiles::{easing_with, weight_bias_with, Easing, SUDDEN_EXPONENT, WEIGHT_BIAS};
use crate::diag::{has_errors, Diagnostic};
use crate::platform::{
    ecl_lookup, forward_kinematics, ik_solve, kinesphere, label_chain, Ecl, EclError, EclKey,
    JointConfig, PlatformSpec,
};
use crate::score::{validate_score, Beats, Direction, Level, Score, TransformError};

pub const DEFAULT_RATE: f64 = 50.0;

/// Numeric knobs for the quality mappings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub sudden_exponent: f64,
    /// Fraction of the kinesphere radius.
    pub weight_bias: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sudden_exponent: SUDDEN_EXPONENT,
            weight_bias: WEIGHT_BIAS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Seconds from the start of the trajectory.
    pub t: f64,
    pub q: JointConfig,
    /// Trace entry in progress at `t`; `None` for an empty trace.
    pub trace_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub platform: String,
    /// Frames per second.
    pub rate: f64,
    pub frames: Vec<Frame>,
    /// Playlist duration in seconds.
    pub duration: f64,
    /// Qualities that could not be realized on this platform.
    pub notes: Vec<String>,
}

impl Trajectory {
    /// Time of the last frame.
    pub fn end_time(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.t)
    }

    /// Index of the frame nearest to `t`, clamped to the trajectory.
    pub fn frame_index_at(&self, t: f64) -> usize {
        if self.frames.is_empty() {
            return 0;
        }
        let i = (t * self.rate).round();
        (i.max(0.0) as usize).min(self.frames.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("frame rate must be positive, got {0}")]
    InvalidRate(f64),
    #[error("score has errors")]
    InvalidScore(Vec<Diagnostic>),
    #[error(transparent)]
    Flatten(#[from] FlattenError),
    #[error("{} pose(s) missing from the configuration library: {}", .0.len(), list(.0))]
    MissingKeys(Vec<EclError>),
}

fn list(errors: &[EclError]) -> String {
    errors
        .iter()
        .map(|e| e.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone)]
pub struct Compiled {
    pub trajectory: Trajectory,
    pub trace: SymbolicTrace,
    /// Non-fatal flatten diagnostics (clamped shifts).
    pub warnings: Vec<Diagnostic>,
}

pub fn compile_score(
    s: &Score,
    spec: &PlatformSpec,
    ecl: &Ecl,
    rate: f64,
) -> Result<(Trajectory, SymbolicTrace), SynthError> {
    compile_score_with(s, spec, ecl, rate, &SynthConfig::default())
        .map(|c| (c.trajectory, c.trace))
}

struct Segment {
    start: f64,
    end: f64,
    target: Option<JointConfig>,
    easing: Easing,
}

pub fn compile_score_with(
    s: &Score,
    spec: &PlatformSpec,
    ecl: &Ecl,
    rate: f64,
    config: &SynthConfig,
) -> Result<Compiled, SynthError> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SynthError::InvalidRate(rate));
    }
    let diags = validate_score(s);
    if has_errors(&diags) {
        return Err(SynthError::InvalidScore(diags));
    }
    let (trace, warnings) = flatten_with_warnings(s)?;

    let mut missing: Vec<EclError> = Vec::new();
    let mut notes = Vec::new();
    let mut segments = Vec::with_capacity(trace.len());
    let seconds_per_beat = 60.0 / s.tempo;
    let mut elapsed: Option<Beats> = None;
    for (i, entry) in trace.entries().iter().enumerate() {
        let start = elapsed.map_or(0.0, |b| b.as_f64() * seconds_per_beat);
        let next = match elapsed {
            None => entry.beats(),
            Some(b) => b
                .checked_add(entry.beats())
                .ok_or(FlattenError::Transform(TransformError::Overflow))?,
        };
        elapsed = Some(next);
        let end = next.as_f64() * seconds_per_beat;
        let (target, easing) = match entry {
            TraceEntry::Hold { .. } => (None, Easing::Linear),
            TraceEntry::Move {
                label,
                direction,
                reach,
                qualities,
                ..
            } => {
                let easing = easing_with(qualities, config.sudden_exponent);
                match ecl_lookup(ecl, label.as_str(), *direction, *reach) {
                    Ok(q) => {
                        let bias = weight_bias_with(qualities, config.weight_bias);
                        let q = if bias == 0.0 {
                            q.clone()
                        } else {
                            let key = EclKey::new(label.as_str(), *direction, *reach);
                            match biased(spec, ecl, &key, q, bias) {
                                Ok(q) => q,
                                Err(why) => {
                                    notes.push(format!("trace entry {}: weight not realized: {why}", i + 1));
                                    q.clone()
                                }
                            }
                        };
                        (Some(q), easing)
                    }
                    Err(e) => {
                        if !missing.contains(&e) {
                            missing.push(e);
                        }
                        (None, easing)
                    }
                }
            }
        };
        segments.push(Segment {
            start,
            end,
            target,
            easing,
        });
    }
    if !missing.is_empty() {
        return Err(SynthError::MissingKeys(missing));
    }

    let duration = segments.last().map_or(0.0, |s| s.end);
    let n = (duration * rate).round() as usize;
    let rest = spec.rest_config();
    // Configuration at the start of each segment.
    let mut from = Vec::with_capacity(segments.len());
    let mut current = rest.clone();
    for seg in &segments {
        from.push(current.clone());
        if let Some(t) = &seg.target {
            current = t.clone();
        }
    }

    let mut frames = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let t = k as f64 / rate;
        let tau = if k == n { duration } else { t.min(duration) };
        while seg + 1 < segments.len() && tau >= segments[seg].end {
            seg += 1;
        }
        let (q, index) = match segments.get(seg) {
            None => (rest.clone(), None),
            Some(sg) => {
                let q = match &sg.target {
                    None => from[seg].clone(),
                    Some(target) => {
                        let s = ((tau - sg.start) / (sg.end - sg.start)).clamp(0.0, 1.0);
                        from[seg].lerp(target, sg.easing.apply(s))
                    }
                };
                (q, Some(seg))
            }
        };
        debug_assert!(spec.within_limits(&q));
        frames.push(Frame {
            t,
            q,
            trace_index: index,
        });
    }

    Ok(Compiled {
        trajectory: Trajectory {
            platform: spec.name().to_string(),
            rate,
            frames,
            duration,
            notes,
        },
        trace,
        warnings,
    })
}

/// Shifts the key's pose vertically by `bias` kinesphere radii. Only done
/// when the library also holds the key one level further in the bias
/// direction, so the platform has shown it can move that way.
fn biased(
    spec: &PlatformSpec,
    ecl: &Ecl,
    key: &EclKey,
    q: &JointConfig,
    bias: f64,
) -> Result<JointConfig, String> {
    let level = match (key.direction.level(), bias > 0.0) {
        (Level::Low, true) => Some(Level::Mid),
        (Level::Mid, true) => Some(Level::High),
        (Level::High, false) => Some(Level::Mid),
        (Level::Mid, false) => Some(Level::Low),
        _ => None,
    };
    let neighbour = level
        .and_then(|l| Direction::new(key.direction.horizontal(), l))
        .map(|d| EclKey::new(key.label.clone(), d, key.reach));
    if neighbour.is_none_or(|k| ecl.get(&k).is_none()) {
        let side = if bias > 0.0 { "above" } else { "below" };
        return Err(format!("no {} pose one level {side} {key}", key.label));
    }
    let sphere = kinesphere(spec, &key.label).map_err(|e| e.to_string())?;
    let chain = label_chain(spec, &key.label).map_err(|e| e.to_string())?;
    let distal = *chain.last().expect("chains are nonempty");
    let mut target = forward_kinematics(spec, q).map_err(|e| e.to_string())?[distal];
    target.z += bias * sphere.radius;
    ik_solve(spec, &key.label, target, q).map_err(|e| e.to_string())
}

/// `*.traj.json`: platform name, rate, one `[t, q...]` row per frame and the
/// symbolic trace.
pub fn trajectory_json(traj: &Trajectory, trace: &SymbolicTrace) -> String {
    struct Row<'a>(&'a Frame);
    impl Serialize for Row<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            use serde::ser::SerializeSeq;
            let mut seq = s.serialize_seq(Some(self.0.q.len() + 1))?;
            seq.serialize_element(&self.0.t)?;
            for a in self.0.q.angles() {
                seq.serialize_element(a)?;
            }
            seq.end()
        }
    }
    #[derive(Serialize)]
    struct File<'a> {
        platform: &'a str,
        rate: f64,
        frames: Vec<Row<'a>>,
        trace: &'a SymbolicTrace,
    }
    let file = File {
        platform: &traj.platform,
        rate: traj.rate,
        frames: traj.frames.iter().map(Row).collect(),
        trace,
    };
    let mut text = serde_json::to_string(&file).expect("trajectory serializes");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::parse;
    use crate::platform::{EclKey, PlatformSpec};
    use crate::score::Reach;

    fn arm() -> PlatformSpec {
        PlatformSpec::from_json_str(
            r#"{"format": 1, "name": "two",
            "links": [
                {"name": "a", "axis": [0,0,1], "length": 1, "limits": [-3.2, 3.2]},
                {"name": "b", "parent": "a", "axis": [0,0,1], "length": 1, "limits": [-3.2, 3.2]}
            ],
            "labels": {"arm": ["a", "b"]}}"#,
        )
        .unwrap()
    }

    fn ecl() -> Ecl {
        let mut e = Ecl::new("two");
        e.entries.insert(
            EclKey::new("arm", "fwd_mid".parse().unwrap(), Reach::Mid),
            JointConfig(vec![1.0, -0.5]),
        );
        e.entries.insert(
            EclKey::new("arm", "back_mid".parse().unwrap(), Reach::Mid),
            JointConfig(vec![-1.0, 0.5]),
        );
        e
    }

    #[test]
    fn single_move_endpoint() {
        let s = parse("phrase p { arm -> fwd_mid for 2 }\nplay p").unwrap();
        let (traj, trace) = compile_score(&s, &arm(), &ecl(), 10.0).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(traj.frames.len(), 21);
        assert_eq!(traj.frames[0].t, 0.0);
        assert!((traj.frames[20].t - 2.0).abs() < 1e-12);
        assert_eq!(traj.frames[0].q, JointConfig(vec![0.0, 0.0]));
        assert_eq!(traj.frames[20].q, JointConfig(vec![1.0, -0.5]));
        assert!((traj.frames[10].q.0[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hold_freezes() {
        let s = parse("phrase p { arm -> fwd_mid for 1\n hold for 1 }\nplay p").unwrap();
        let (traj, _) = compile_score(&s, &arm(), &ecl(), 10.0).unwrap();
        for f in &traj.frames[10..] {
            assert_eq!(f.q, JointConfig(vec![1.0, -0.5]));
            assert_eq!(f.trace_index, Some(1));
        }
    }

    #[test]
    fn missing_keys_are_batched() {
        let s = parse("phrase p { arm -> fwd_high for 1\n arm -> fwd_mid for 1\n arm -> left_low for 1\n arm -> fwd_high for 1 }\nplay p").unwrap();
        match compile_score(&s, &arm(), &ecl(), 10.0) {
            Err(SynthError::MissingKeys(m)) => assert_eq!(m.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_rate() {
        let s = parse("").unwrap();
        assert_eq!(
            compile_score(&s, &arm(), &ecl(), 0.0).unwrap_err(),
            SynthError::InvalidRate(0.0)
        );
    }

    #[test]
    fn empty_score_is_one_rest_frame() {
        let (traj, trace) = compile_score(&parse("").unwrap(), &arm(), &ecl(), 10.0).unwrap();
        assert!(trace.is_empty());
        assert_eq!(traj.frames.len(), 1);
        assert_eq!(traj.frames[0].trace_index, None);
    }

    #[test]
    fn weight_without_a_neighbour_is_noted() {
        let s = parse("phrase p { arm -> fwd_mid for 1 [weight: light] }\nplay p").unwrap();
        let c = compile_score_with(&s, &arm(), &ecl(), 10.0, &SynthConfig::default()).unwrap();
        assert_eq!(c.trajectory.notes.len(), 1);
        assert_eq!(c.trajectory.frames.last().unwrap().q, JointConfig(vec![1.0, -0.5]));
    }

    #[test]
    fn json_shape() {
        let s = parse("phrase p { arm -> fwd_mid for 1 }\nplay p").unwrap();
        let (traj, trace) = compile_score(&s, &arm(), &ecl(), 2.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&trajectory_json(&traj, &trace)).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 4);
        for k in ["platform", "rate", "frames", "trace"] {
            assert!(keys.contains(&k));
        }
        assert_eq!(v["frames"][2], serde_json::json!([1.0, 1.0, -0.5]));
    }
}
