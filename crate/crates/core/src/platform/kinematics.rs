//! Serial-chain forward kinematics, kinespheres and CCD inverse kinematics.

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spec::PlatformSpec;

/// One angle (radians) per link, indexed like [`PlatformSpec::links`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn zeros(n: usize) -> Self {
        JointConfig(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn lerp(&self, other: &JointConfig, u: f64) -> JointConfig {
        JointConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + (b - a) * u)
                .collect(),
        )
    }

    /// Largest per-joint absolute difference.
    pub fn max_delta(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("joint config has {got} angles but the platform has {expected} links")]
    ConfigLength { expected: usize, got: usize },
    #[error("unknown body label '{0}'")]
    UnknownLabel(String),
    #[error("label '{0}' has zero extent")]
    ZeroExtent(String),
    #[error("target is {distance:.4} m from the kinesphere centre, beyond radius {radius:.4} m")]
    Unreachable { distance: f64, radius: f64 },
    #[error("IK did not converge after {sweeps} sweeps (best residual {best_residual:.6} m)")]
    NonConvergence {
        sweeps: usize,
        best_residual: f64,
        best: JointConfig,
    },
}

/// World-space pose of every link at one configuration.
#[derive(Debug, Clone)]
pub struct Frames {
    /// Proximal joint position of each link.
    pub starts: Vec<Vector3<f64>>,
    /// Distal endpoint of each link.
    pub ends: Vec<Vector3<f64>>,
    /// Orientation of each link's frame after its own joint rotation.
    pub rotations: Vec<Rotation3<f64>>,
}

impl PlatformSpec {
    /// Zero angles clamped into each joint's limits.
    pub fn rest_config(&self) -> JointConfig {
        JointConfig(self.links().iter().map(|l| 0.0f64.clamp(l.limits.0, l.limits.1)).collect())
    }

    pub fn clamp(&self, q: &mut JointConfig) {
        for (a, l) in q.0.iter_mut().zip(self.links()) {
            *a = a.clamp(l.limits.0, l.limits.1);
        }
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.len() == self.link_count()
            && q
                .0
                .iter()
                .zip(self.links())
                .all(|(a, l)| *a >= l.limits.0 && *a <= l.limits.1)
    }

    pub fn frames(&self, q: &JointConfig) -> Result<Frames, KinematicsError> {
        let n = self.link_count();
        if q.len() != n {
            return Err(KinematicsError::ConfigLength {
                expected: n,
                got: q.len(),
            });
        }
        let mut starts = vec![Vector3::zeros(); n];
        let mut ends = vec![Vector3::zeros(); n];
        let mut rotations = vec![Rotation3::identity(); n];
        for &i in self.topological_order() {
            let link = &self.links()[i];
            let (start, parent_rot) = match link.parent {
                Some(p) => (ends[p], rotations[p]),
                None => (self.root(), Rotation3::identity()),
            };
            let rot = parent_rot * Rotation3::from_axis_angle(&link.axis, q.0[i]);
            starts[i] = start;
            ends[i] = start + rot * (link.offset.into_inner() * link.length);
            rotations[i] = rot;
        }
        Ok(Frames {
            starts,
            ends,
            rotations,
        })
    }
}

/// Distal endpoint of every link, indexed like the platform's links.
pub fn forward_kinematics(
    spec: &PlatformSpec,
    q: &JointConfig,
) -> Result<Vec<Vector3<f64>>, KinematicsError> {
    spec.frames(q).map(|f| f.ends)
}

/// The sphere a label's chain can sweep without moving its proximal joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinesphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

/// The chain of links a label moves, proximal first, ending at its most
/// distal link.
pub fn label_chain(spec: &PlatformSpec, label: &str) -> Result<Vec<usize>, KinematicsError> {
    let set = spec
        .label_links(label)
        .ok_or_else(|| KinematicsError::UnknownLabel(label.to_string()))?;
    // Deepest link, earliest in file order on ties.
    let distal = set
        .iter()
        .copied()
        .max_by(|&a, &b| spec.depth(a).cmp(&spec.depth(b)).then(b.cmp(&a)))
        .ok_or_else(|| KinematicsError::UnknownLabel(label.to_string()))?;
    let mut chain = vec![distal];
    let mut cur = distal;
    while let Some(p) = spec.links()[cur].parent.filter(|p| set.contains(p)) {
        chain.push(p);
        cur = p;
    }
    chain.reverse();
    Ok(chain)
}

pub fn kinesphere(spec: &PlatformSpec, label: &str) -> Result<Kinesphere, KinematicsError> {
    let chain = label_chain(spec, label)?;
    let frames = spec.frames(&spec.rest_config())?;
    let radius: f64 = chain.iter().map(|&i| spec.links()[i].length).sum();
    Ok(Kinesphere {
        center: frames.starts[chain[0]],
        radius,
    })
}

pub const IK_MAX_SWEEPS: usize = 200;
/// Accepted residual as a fraction of the kinesphere radius.
pub const IK_TOLERANCE: f64 = 1e-3;
const STALL_KICK: f64 = 0.5;
const RESTART_BEND: f64 = 1.0;

/// `current + delta` brought into `[lo, hi]`, preferring an equivalent angle a
/// full turn away over clamping.
fn step_within_limits(current: f64, delta: f64, (lo, hi): (f64, f64)) -> f64 {
    let tau = std::f64::consts::TAU;
    let wanted = current + delta;
    [wanted, wanted - tau, wanted + tau]
        .into_iter()
        .find(|a| (lo..=hi).contains(a))
        .unwrap_or_else(|| wanted.clamp(lo, hi))
}

/// Moves the label's distal point to `target` by cyclic coordinate descent
/// over the label's chain, starting from `q0`. Joints outside the chain keep
/// their `q0` angles.
pub fn ik_solve(
    spec: &PlatformSpec,
    label: &str,
    target: Vector3<f64>,
    q0: &JointConfig,
) -> Result<JointConfig, KinematicsError> {
    let chain = label_chain(spec, label)?;
    let sphere = kinesphere(spec, label)?;
    if sphere.radius <= 0.0 {
        return Err(KinematicsError::ZeroExtent(label.to_string()));
    }
    let distance = (target - sphere.center).norm();
    if distance > sphere.radius * (1.0 + 1e-9) {
        return Err(KinematicsError::Unreachable {
            distance,
            radius: sphere.radius,
        });
    }
    let tol = IK_TOLERANCE * sphere.radius;
    let distal = *chain.last().expect("chains are nonempty");

    let mut q = q0.clone();
    spec.clamp(&mut q);
    let residual = distal_residual(spec, distal, target, &q)?;
    if residual <= tol {
        return Ok(q);
    }

    // Seeds tried in turn: the caller's, then bent rest poses that avoid the
    // straight and folded singularities.
    let mut seeds = vec![(q.clone(), Order::ProximalFirst), (q, Order::DistalFirst)];
    for bend in [RESTART_BEND, -RESTART_BEND] {
        let mut s = q0.clone();
        for &j in &chain[1..] {
            s.0[j] = bend;
        }
        spec.clamp(&mut s);
        seeds.push((s, Order::DistalFirst));
    }

    let mut best: Option<(JointConfig, f64)> = None;
    for (seed, order) in seeds {
        let (q, r) = ccd(spec, &chain, target, seed, order, tol)?;
        if r <= tol {
            return Ok(q);
        }
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((q, r));
        }
    }
    let (best, best_residual) = best.expect("at least one seed");
    Err(KinematicsError::NonConvergence {
        sweeps: IK_MAX_SWEEPS,
        best_residual,
        best,
    })
}

#[derive(Clone, Copy)]
enum Order {
    ProximalFirst,
    DistalFirst,
}

fn distal_residual(
    spec: &PlatformSpec,
    distal: usize,
    target: Vector3<f64>,
    q: &JointConfig,
) -> Result<f64, KinematicsError> {
    Ok((spec.frames(q)?.ends[distal] - target).norm())
}

/// Up to [`IK_MAX_SWEEPS`] CCD sweeps; returns the best pose seen.
fn ccd(
    spec: &PlatformSpec,
    chain: &[usize],
    target: Vector3<f64>,
    mut q: JointConfig,
    order: Order,
    tol: f64,
) -> Result<(JointConfig, f64), KinematicsError> {
    let distal = *chain.last().expect("chains are nonempty");
    let mut best_residual = distal_residual(spec, distal, target, &q)?;
    let mut best = q.clone();
    let mut prev = best_residual;
    let joints: Vec<usize> = match order {
        Order::ProximalFirst => chain.to_vec(),
        Order::DistalFirst => chain.iter().rev().copied().collect(),
    };

    for _ in 0..IK_MAX_SWEEPS {
        for &j in &joints {
            let frames = spec.frames(&q)?;
            let link = &spec.links()[j];
            let parent_rot = link
                .parent
                .map_or(Rotation3::identity(), |p| frames.rotations[p]);
            let axis = parent_rot * link.axis.into_inner();
            let pivot = frames.starts[j];
            let to_end = frames.ends[distal] - pivot;
            let to_target = target - pivot;
            let u = to_end - axis * axis.dot(&to_end);
            let v = to_target - axis * axis.dot(&to_target);
            if u.norm() < 1e-12 || v.norm() < 1e-12 {
                continue;
            }
            let angle = axis.dot(&u.cross(&v)).atan2(u.dot(&v));
            q.0[j] = step_within_limits(q.0[j], angle, link.limits);
        }
        let r = distal_residual(spec, distal, target, &q)?;
        if r < best_residual {
            best_residual = r;
            best = q.clone();
        }
        // Stop well inside the bound so callers get margin, not a borderline pose.
        if best_residual <= 0.5 * tol {
            break;
        }
        if prev - r <= 1e-9 * tol {
            // Stalled, usually on a straight chain pointing at the target.
            for &j in &chain[1..] {
                let (lo, hi) = spec.links()[j].limits;
                let bent = if q.0[j] + STALL_KICK <= hi {
                    q.0[j] + STALL_KICK
                } else {
                    q.0[j] - STALL_KICK
                };
                q.0[j] = bent.clamp(lo, hi);
            }
        }
        prev = r;
    }
    Ok((best, best_residual))
}
