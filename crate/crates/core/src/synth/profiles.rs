//! Quality-derived time warps and offset oscillators.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::score::{Qualities, Time, Weight};

pub const SUDDEN_EXPONENT: f64 = 1.0 / 3.0;
pub const WEIGHT_BIAS: f64 = 0.1;

/// Unit time warp for one move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Easing {
    Linear,
    /// `(1 - cos(pi s)) / 2`
    Cosine,
    /// `s^exponent`, front-loaded for exponents below 1.
    Power(f64),
}

impl Easing {
    pub fn apply(self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Easing::Linear => s,
            Easing::Cosine => (1.0 - (PI * s).cos()) / 2.0,
            Easing::Power(e) => s.powf(e),
        }
    }
}

/// Sustained eases in and out, Sudden front-loads, no Time quality is linear.
pub fn easing(q: &Qualities) -> Easing {
    easing_with(q, SUDDEN_EXPONENT)
}

pub fn easing_with(q: &Qualities, sudden_exponent: f64) -> Easing {
    match q.time {
        Some(Time::Sustained) => Easing::Cosine,
        Some(Time::Sudden) => Easing::Power(sudden_exponent),
        None => Easing::Linear,
    }
}

/// Vertical offset as a fraction of the kinesphere radius: Light lifts,
/// Strong sinks.
pub fn weight_bias(q: &Qualities) -> f64 {
    weight_bias_with(q, WEIGHT_BIAS)
}

pub fn weight_bias_with(q: &Qualities, magnitude: f64) -> f64 {
    match q.weight {
        Some(Weight::Light) => magnitude,
        Some(Weight::Strong) => -magnitude,
        None => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoverKind {
    Bounce,
    Drag,
}

/// Vertical hover: bouncing rides `|sin|`, dragging rides `1 - |sin|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoverProfile {
    pub kind: HoverKind,
    /// Metres.
    pub amplitude: f64,
    /// Radians per second.
    pub cadence: f64,
}

impl HoverProfile {
    pub fn bounce() -> Self {
        HoverProfile {
            kind: HoverKind::Bounce,
            amplitude: 0.30,
            cadence: 2.0,
        }
    }

    pub fn drag() -> Self {
        HoverProfile {
            kind: HoverKind::Drag,
            amplitude: 0.15,
            cadence: 0.8,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.amplitude > 0.0 && self.cadence > 0.0
    }
}

pub fn hover_offset(p: &HoverProfile, t: f64) -> f64 {
    let s = (p.cadence * t).sin().abs();
    match p.kind {
        HoverKind::Bounce => p.amplitude * s,
        HoverKind::Drag => p.amplitude * (1.0 - s),
    }
}

/// Per-axis breathing oscillator `A_i sin(2 pi t / period + phi_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreathProfile {
    /// Metres, x y z.
    pub amplitude: [f64; 3],
    /// Radians, x y z.
    pub phase: [f64; 3],
    /// Seconds.
    pub period: f64,
}

impl Default for BreathProfile {
    /// The sagittal (y) axis swings widest and the vertical (z) least. From
    /// the start of a breath x rises at once, z after a quarter period and y
    /// after half of one.
    fn default() -> Self {
        BreathProfile {
            amplitude: [0.02, 0.03, 0.01],
            phase: [0.0, FRAC_PI_2, PI],
            period: 4.0,
        }
    }
}

pub fn breath_offset(b: &BreathProfile, t: f64) -> Vector3<f64> {
    let w = TAU * t / b.period;
    Vector3::from_fn(|i, _| b.amplitude[i] * (w + b.phase[i]).sin())
}
