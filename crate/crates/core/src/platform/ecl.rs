//! Embodied Configuration Libraries (`*.ecl.json`): symbolic poses grounded
//! in one platform's joint space.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kinematics::{ik_solve, kinesphere, JointConfig, KinematicsError};
use super::spec::{PlatformError, PlatformSpec, Violation, FORMAT_VERSION};
use crate::score::{enumerate_directions, Direction, Reach};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EclKey {
    pub label: String,
    pub direction: Direction,
    pub reach: Reach,
}

impl EclKey {
    pub fn new(label: impl Into<String>, direction: Direction, reach: Reach) -> Self {
        EclKey {
            label: label.into(),
            direction,
            reach,
        }
    }
}

impl fmt::Display for EclKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.label, self.direction, self.reach)
    }
}

// Label, then enumeration order, then reach.
impl Ord for EclKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label
            .cmp(&other.label)
            .then(self.direction.index().cmp(&other.direction.index()))
            .then(self.reach.cmp(&other.reach))
    }
}

impl PartialOrd for EclKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ecl {
    pub platform: String,
    pub entries: BTreeMap<EclKey, JointConfig>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EclError {
    #[error("no pose for {key}{}", suggestion.as_ref().map(|s| format!("; nearest available is {s}")).unwrap_or_default())]
    Missing {
        key: EclKey,
        suggestion: Option<EclKey>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EclFile {
    format: u32,
    platform: String,
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    label: String,
    direction: Direction,
    reach: Reach,
    q: Vec<f64>,
}

impl Ecl {
    pub fn new(platform: impl Into<String>) -> Self {
        Ecl {
            platform: platform.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &EclKey) -> Option<&JointConfig> {
        self.entries.get(key)
    }

    pub fn to_json(&self) -> String {
        let file = EclFile {
            format: FORMAT_VERSION,
            platform: self.platform.clone(),
            entries: self
                .entries
                .iter()
                .map(|(k, q)| EntryFile {
                    label: k.label.clone(),
                    direction: k.direction,
                    reach: k.reach,
                    q: q.0.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("ECL serializes");
        text.push('\n');
        text
    }

    /// Parses and checks an ECL against `spec`.
    pub fn from_json_str(text: &str, spec: &PlatformSpec) -> Result<Self, PlatformError> {
        parse_ecl(text, spec, Path::new("<ecl>"))
    }
}

fn parse_ecl(text: &str, spec: &PlatformSpec, path: &Path) -> Result<Ecl, PlatformError> {
    let file: EclFile =
        serde_json::from_str(text).map_err(|e| PlatformError::from_json(path, e))?;
    let mut violations = Vec::new();
    let mut bad = |pointer: String, message: String| violations.push(Violation { pointer, message });
    if file.format != FORMAT_VERSION {
        bad(
            "/format".into(),
            format!("unsupported format {} (expected {FORMAT_VERSION})", file.format),
        );
    }
    if file.platform != spec.name() {
        bad(
            "/platform".into(),
            format!(
                "library is for platform '{}', not '{}'",
                file.platform,
                spec.name()
            ),
        );
    }
    let mut ecl = Ecl::new(file.platform.clone());
    for (i, e) in file.entries.into_iter().enumerate() {
        let key = EclKey::new(e.label, e.direction, e.reach);
        let at = format!("/entries/{i}");
        if spec.label_links(&key.label).is_none() {
            bad(format!("{at}/label"), format!("entry {key}: unknown label '{}'", key.label));
        }
        if e.q.len() != spec.link_count() {
            bad(
                format!("{at}/q"),
                format!(
                    "entry {key}: {} angles for {} links",
                    e.q.len(),
                    spec.link_count()
                ),
            );
        } else {
            for (j, (a, link)) in e.q.iter().zip(spec.links()).enumerate() {
                let (lo, hi) = link.limits;
                if !a.is_finite() || *a < lo || *a > hi {
                    bad(
                        format!("{at}/q/{j}"),
                        format!(
                            "entry {key}: angle {a} outside limits [{lo}, {hi}] of link '{}'",
                            link.name
                        ),
                    );
                }
            }
        }
        if ecl.entries.contains_key(&key) {
            bad(at, format!("duplicate entry {key}"));
            continue;
        }
        ecl.entries.insert(key, JointConfig(e.q));
    }
    if violations.is_empty() {
        Ok(ecl)
    } else {
        Err(PlatformError::Invalid {
            path: path.to_path_buf(),
            violations,
        })
    }
}

pub fn load_ecl(path: impl AsRef<Path>, spec: &PlatformSpec) -> Result<Ecl, PlatformError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PlatformError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_ecl(&text, spec, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingKey {
    #[serde(flatten)]
    pub key: EclKey,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub requested: usize,
    pub present: usize,
    pub missing: Vec<MissingKey>,
}

impl Coverage {
    pub fn fraction(&self) -> f64 {
        if self.requested == 0 {
            1.0
        } else {
            self.present as f64 / self.requested as f64
        }
    }
}

/// Keys a synthesis requests: every label, reach and direction, in that
/// nesting order.
pub fn requested_keys(spec: &PlatformSpec) -> Vec<EclKey> {
    let dirs = enumerate_directions();
    spec.labels()
        .flat_map(|label| {
            let dirs = &dirs;
            Reach::ALL.into_iter().flat_map(move |reach| {
                dirs.iter().map(move |&d| EclKey::new(label, d, reach))
            })
        })
        .collect()
}

/// Builds an ECL by walking each label through the directions in
/// enumeration order at each reach, solving IK for every target and seeding
/// each solve with the last success.
pub fn ecl_synthesize(spec: &PlatformSpec) -> (Ecl, Coverage) {
    let mut ecl = Ecl::new(spec.name());
    let mut missing = Vec::new();
    let keys = requested_keys(spec);
    let scale = spec.reach_scale();
    let rest = spec.rest_config();
    let mut seed = rest.clone();
    let mut current: Option<(String, Reach)> = None;

    for key in &keys {
        if current.as_ref() != Some(&(key.label.clone(), key.reach)) {
            current = Some((key.label.clone(), key.reach));
            seed = rest.clone();
        }
        let result = kinesphere(spec, &key.label).and_then(|sphere| {
            let target =
                sphere.center + key.direction.vector() * (scale.of(key.reach) * sphere.radius);
            ik_solve(spec, &key.label, target, &seed)
        });
        match result {
            Ok(q) => {
                debug_assert!(spec.within_limits(&q));
                seed = q.clone();
                ecl.entries.insert(key.clone(), q);
            }
            Err(e) => missing.push(MissingKey {
                key: key.clone(),
                reason: reason(&e),
            }),
        }
    }
    let coverage = Coverage {
        requested: keys.len(),
        present: ecl.len(),
        missing,
    };
    (ecl, coverage)
}

fn reason(e: &KinematicsError) -> String {
    e.to_string()
}

/// The stored pose for a key, or an error naming the closest stored key for
/// the same label.
pub fn ecl_lookup<'a>(
    ecl: &'a Ecl,
    label: &str,
    direction: Direction,
    reach: Reach,
) -> Result<&'a JointConfig, EclError> {
    let key = EclKey::new(label, direction, reach);
    if let Some(q) = ecl.entries.get(&key) {
        return Ok(q);
    }
    Err(EclError::Missing {
        suggestion: nearest_key(ecl, &key),
        key,
    })
}

/// Highest cosine similarity, then earlier enumeration index, then closer
/// reach, then the nearer-in reach.
pub fn nearest_key(ecl: &Ecl, key: &EclKey) -> Option<EclKey> {
    let want = key.direction.vector();
    let rank = |k: &EclKey| {
        (
            want.dot(&k.direction.vector()),
            k.direction.index(),
            k.reach.index().abs_diff(key.reach.index()),
            k.reach.index(),
        )
    };
    ecl.entries
        .keys()
        .filter(|k| k.label == key.label)
        .min_by(|a, b| {
            let (ca, ia, da, ra) = rank(a);
            let (cb, ib, db, rb) = rank(b);
            let cos = if (ca - cb).abs() <= 1e-12 {
                Ordering::Equal
            } else {
                cb.total_cmp(&ca)
            };
            cos.then(ia.cmp(&ib)).then(da.cmp(&db)).then(ra.cmp(&rb))
        })
        .cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ARM3: &str = r#"{"format": 1, "name": "arm3",
        "links": [
            {"name": "upper", "axis": [0,0,1], "length": 1, "limits": [-3.2, 3.2]},
            {"name": "fore", "parent": "upper", "axis": [0,0,1], "length": 1, "limits": [-3.2, 3.2]},
            {"name": "hand", "parent": "fore", "axis": [0,0,1], "length": 1, "limits": [-3.2, 3.2]}
        ],
        "labels": {"arm": ["upper", "fore", "hand"], "forearm": ["fore", "hand"]}}"#;

    fn d(s: &str) -> Direction {
        s.parse().unwrap()
    }

    #[test]
    fn lookup_present_and_nearest_reach() {
        let mut ecl = Ecl::new("arm3");
        let q = JointConfig(vec![0.1, 0.2, 0.3]);
        ecl.entries
            .insert(EclKey::new("arm", d("fwd_high"), Reach::Mid), q.clone());
        ecl.entries
            .insert(EclKey::new("arm", d("back_low"), Reach::Far), q.clone());
        assert_eq!(ecl_lookup(&ecl, "arm", d("fwd_high"), Reach::Mid), Ok(&q));
        match ecl_lookup(&ecl, "arm", d("fwd_high"), Reach::Far) {
            Err(EclError::Missing { suggestion, .. }) => assert_eq!(
                suggestion,
                Some(EclKey::new("arm", d("fwd_high"), Reach::Mid))
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_library_has_no_suggestion() {
        let ecl = Ecl::new("arm3");
        let err = ecl_lookup(&ecl, "arm", d("fwd_high"), Reach::Far).unwrap_err();
        assert_eq!(
            err,
            EclError::Missing {
                key: EclKey::new("arm", d("fwd_high"), Reach::Far),
                suggestion: None
            }
        );
        assert_eq!(err.to_string(), "no pose for (arm, fwd_high, far)");
    }

    #[test]
    fn cosine_ties_break_on_enumeration_order() {
        let mut ecl = Ecl::new("x");
        let q = JointConfig(vec![]);
        // right_mid and left_mid are both orthogonal to fwd_mid.
        ecl.entries
            .insert(EclKey::new("a", d("left_mid"), Reach::Mid), q.clone());
        ecl.entries
            .insert(EclKey::new("a", d("right_mid"), Reach::Mid), q.clone());
        let s = nearest_key(&ecl, &EclKey::new("a", d("fwd_mid"), Reach::Mid)).unwrap();
        assert_eq!(s.direction, d("right_mid"));
    }

    #[test]
    fn file_round_trip_and_limit_violation() {
        let spec = PlatformSpec::from_json_str(ARM3).unwrap();
        let mut ecl = Ecl::new("arm3");
        ecl.entries.insert(
            EclKey::new("arm", d("fwd_mid"), Reach::Far),
            JointConfig(vec![1.0, 0.0, 0.0]),
        );
        let text = ecl.to_json();
        assert_eq!(Ecl::from_json_str(&text, &spec).unwrap(), ecl);

        let bad = text.replace("1.0,", "4.0,");
        let err = Ecl::from_json_str(&bad, &spec).unwrap_err();
        let v = err.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].pointer, "/entries/0/q/0");
        assert!(v[0].message.contains("(arm, fwd_mid, far)"), "{}", v[0]);
    }

    #[test]
    fn unknown_label_and_platform_mismatch() {
        let spec = PlatformSpec::from_json_str(ARM3).unwrap();
        let text = r#"{"format": 1, "platform": "other", "entries": [
            {"label": "tail", "direction": "fwd_mid", "reach": "far", "q": [0, 0, 0]}]}"#;
        let err = Ecl::from_json_str(text, &spec).unwrap_err();
        let pointers: Vec<&str> = err.violations().iter().map(|v| v.pointer.as_str()).collect();
        assert_eq!(pointers, ["/platform", "/entries/0/label"]);
    }

    #[test]
    fn planar_arm_covers_the_mid_row() {
        let spec = PlatformSpec::from_json_str(ARM3).unwrap();
        let (ecl, coverage) = ecl_synthesize(&spec);
        assert_eq!(coverage.requested, 2 * 26 * 3);
        for key in ecl.entries.keys() {
            assert_eq!(key.direction.offset()[2], 0, "{key}");
        }
        assert_eq!(coverage.present, 2 * 8 * 3);
        assert_eq!(coverage.present + coverage.missing.len(), coverage.requested);
        let (again, _) = ecl_synthesize(&spec);
        assert_eq!(again, ecl);
    }
}
