//! Platform descriptions, kinematics and Embodied Configuration Libraries.

mod ecl;
mod kinematics;
mod spec;

pub use ecl::{
    ecl_lookup, ecl_synthesize, load_ecl, nearest_key, requested_keys, Coverage, Ecl, EclError,
    EclKey, MissingKey,
};
pub use kinematics::{
    forward_kinematics, ik_solve, kinesphere, label_chain, Frames, JointConfig, Kinesphere,
    KinematicsError, IK_MAX_SWEEPS, IK_TOLERANCE,
};
pub use spec::{
    load_platform, Link, LinkFile, PlatformError, PlatformFile, PlatformSpec, Violation,
    FORMAT_VERSION,
};
