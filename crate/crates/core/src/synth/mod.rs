//! From a valid score to a timed joint trajectory.

mod flatten;
mod profiles;
mod trajectory;

pub use flatten::{flatten, flatten_with_warnings, FlattenError, SymbolicTrace, TraceEntry};
pub use profiles::{
    breath_offset, easing, easing_with, hover_offset, weight_bias, weight_bias_with,
    BreathProfile, Easing, HoverKind, HoverProfile, SUDDEN_EXPONENT, WEIGHT_BIAS,
};
pub use trajectory::{
    compile_score, compile_score_with, trajectory_json, Compiled, Frame, SynthConfig, SynthError,
    Trajectory, DEFAULT_RATE,
};
