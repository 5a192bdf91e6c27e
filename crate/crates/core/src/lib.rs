//! Compiler core for choreographic movement scores.
//!
//! - [`score`]: the score model and its transform algebra
//! - [`notation`]: the textual `.mvt` language (parser, printer, linter)
//! - [`platform`]: platform descriptions, kinematics and pose libraries
//! - [`synth`]: flattening scores and synthesizing joint trajectories

pub mod diag;
pub mod notation;
pub mod platform;
pub mod score;
#[cfg(feature = "strategies")]
pub mod strategies;
pub mod synth;
