//! Expressive platform descriptions (`*.eurdf.json`).
//!
//! A platform is a tree of revolute links plus a map of body labels to link
//! sets. Labels may overlap at different granularities, e.g. `arm` covering
//! every link and `forearm` only the distal ones.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score::ReachScale;

pub const FORMAT_VERSION: u32 = 1;

/// One invariant violation, located by a JSON pointer into the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

fn list(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {}", path.display(), list(violations))]
    Invalid {
        path: PathBuf,
        violations: Vec<Violation>,
    },
}

impl PlatformError {
    pub(crate) fn from_json(path: &Path, e: serde_json::Error) -> Self {
        PlatformError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            PlatformError::Invalid { violations, .. } => violations,
            _ => &[],
        }
    }
}

/// On-disk link record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    pub axis: [f64; 3],
    #[serde(default = "default_offset")]
    pub offset: [f64; 3],
    pub length: f64,
    pub limits: [f64; 2],
}

fn default_offset() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

/// On-disk platform record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformFile {
    pub format: u32,
    pub name: String,
    #[serde(default)]
    pub root: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach_scale: Option<[f64; 3]>,
    pub links: Vec<LinkFile>,
    pub labels: BTreeMap<String, Vec<String>>,
}

/// A revolute link: it rotates about `axis` at its proximal end and extends
/// `length` metres along `offset`, both in the parent's frame at zero angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub name: String,
    pub parent: Option<usize>,
    pub axis: Unit<Vector3<f64>>,
    pub offset: Unit<Vector3<f64>>,
    pub length: f64,
    pub limits: (f64, f64),
}

/// A validated platform description.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformSpec {
    name: String,
    root: Vector3<f64>,
    links: Vec<Link>,
    /// Parents before children.
    order: Vec<usize>,
    labels: BTreeMap<String, BTreeSet<usize>>,
    reach_scale: ReachScale,
}

impl PlatformSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> Vector3<f64> {
        self.root
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    /// Link indices with every parent ahead of its children.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn label_links(&self, label: &str) -> Option<&BTreeSet<usize>> {
        self.labels.get(label)
    }

    pub fn reach_scale(&self) -> ReachScale {
        self.reach_scale
    }

    pub fn depth(&self, mut link: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.links[link].parent {
            d += 1;
            link = p;
        }
        d
    }

    pub fn from_json_str(text: &str) -> Result<Self, PlatformError> {
        let path = Path::new("<inline>");
        let file: PlatformFile =
            serde_json::from_str(text).map_err(|e| PlatformError::from_json(path, e))?;
        Self::from_file(file).map_err(|violations| PlatformError::Invalid {
            path: path.to_path_buf(),
            violations,
        })
    }

    /// Validates a parsed platform record.
    pub fn from_file(file: PlatformFile) -> Result<Self, Vec<Violation>> {
        let mut v = Vec::new();
        let mut push = |pointer: String, message: String| v.push(Violation { pointer, message });

        if file.format != FORMAT_VERSION {
            push(
                "/format".into(),
                format!("unsupported format {} (expected {FORMAT_VERSION})", file.format),
            );
        }
        if file.name.is_empty() {
            push("/name".into(), "platform name must not be empty".into());
        }
        if file.root.iter().any(|c| !c.is_finite()) {
            push("/root".into(), "root position must be finite".into());
        }
        let reach_scale = ReachScale(file.reach_scale.unwrap_or(ReachScale::default().0));
        if !reach_scale.is_valid() {
            push(
                "/reach_scale".into(),
                "reach scales must satisfy 0 < near < mid < far <= 1".into(),
            );
        }
        if file.links.is_empty() {
            push("/links".into(), "a platform needs at least one link".into());
        }

        let mut names: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, link) in file.links.iter().enumerate() {
            if names.insert(link.name.as_str(), i).is_some() {
                push(format!("/links/{i}/name"), format!("duplicate link name '{}'", link.name));
            }
        }

        let mut links = Vec::with_capacity(file.links.len());
        for (i, link) in file.links.iter().enumerate() {
            let parent = match &link.parent {
                None => None,
                Some(p) => match names.get(p.as_str()) {
                    Some(&j) if j == i => {
                        push(format!("/links/{i}/parent"), format!("link '{p}' is its own parent"));
                        None
                    }
                    Some(&j) => Some(j),
                    None => {
                        push(format!("/links/{i}/parent"), format!("unknown parent link '{p}'"));
                        None
                    }
                },
            };
            let axis = Vector3::from(link.axis);
            let offset = Vector3::from(link.offset);
            if !(axis.iter().all(|c| c.is_finite()) && axis.norm() > 1e-9) {
                push(format!("/links/{i}/axis"), "axis must be a nonzero finite vector".into());
            }
            if !(offset.iter().all(|c| c.is_finite()) && offset.norm() > 1e-9) {
                push(format!("/links/{i}/offset"), "offset must be a nonzero finite vector".into());
            }
            if !(link.length.is_finite() && link.length >= 0.0) {
                push(format!("/links/{i}/length"), "length must be finite and >= 0".into());
            }
            let [lo, hi] = link.limits;
            if !(lo.is_finite() && hi.is_finite()) {
                push(format!("/links/{i}/limits"), "joint limits must be finite".into());
            } else if lo > hi {
                push(
                    format!("/links/{i}/limits"),
                    format!("joint limits out of order: {lo} > {hi}"),
                );
            }
            links.push(Link {
                name: link.name.clone(),
                parent,
                axis: Unit::new_normalize(if axis.norm() > 1e-9 { axis } else { Vector3::z() }),
                offset: Unit::new_normalize(if offset.norm() > 1e-9 { offset } else { Vector3::x() }),
                length: link.length,
                limits: (lo, hi),
            });
        }

        let order = match topological(&links) {
            Ok(order) => order,
            Err(cycle) => {
                let names: Vec<&str> = cycle.iter().map(|&i| links[i].name.as_str()).collect();
                push(
                    format!("/links/{}/parent", cycle[0]),
                    format!("cyclic link graph: {} -> {}", names.join(" -> "), names[0]),
                );
                Vec::new()
            }
        };

        let mut labels = BTreeMap::new();
        for (label, members) in &file.labels {
            let pointer = format!("/labels/{}", escape_pointer(label));
            if members.is_empty() {
                push(pointer.clone(), format!("label '{label}' has no links"));
                continue;
            }
            let mut set = BTreeSet::new();
            for (k, m) in members.iter().enumerate() {
                match names.get(m.as_str()) {
                    Some(&i) => {
                        set.insert(i);
                    }
                    None => push(format!("{pointer}/{k}"), format!("label '{label}' names unknown link '{m}'")),
                }
            }
            if set.len() == members.len() && !order.is_empty() {
                let roots = set
                    .iter()
                    .filter(|&&i| links[i].parent.is_none_or(|p| !set.contains(&p)))
                    .count();
                if roots != 1 {
                    push(pointer.clone(), format!("links of label '{label}' are not connected"));
                }
            }
            labels.insert(label.clone(), set);
        }

        if !v.is_empty() {
            return Err(v);
        }
        Ok(PlatformSpec {
            name: file.name,
            root: Vector3::from(file.root),
            links,
            order,
            labels,
            reach_scale,
        })
    }

    pub fn to_file(&self) -> PlatformFile {
        PlatformFile {
            format: FORMAT_VERSION,
            name: self.name.clone(),
            root: self.root.into(),
            reach_scale: (self.reach_scale != ReachScale::default()).then_some(self.reach_scale.0),
            links: self
                .links
                .iter()
                .map(|l| LinkFile {
                    name: l.name.clone(),
                    parent: l.parent.map(|p| self.links[p].name.clone()),
                    axis: l.axis.into_inner().into(),
                    offset: l.offset.into_inner().into(),
                    length: l.length,
                    limits: [l.limits.0, l.limits.1],
                })
                .collect(),
            labels: self
                .labels
                .iter()
                .map(|(k, set)| (k.clone(), set.iter().map(|&i| self.links[i].name.clone()).collect()))
                .collect(),
        }
    }
}

impl Serialize for PlatformSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

fn escape_pointer(s: &str) -> String {
    s.replace('~', "~0").replace('/', "~1")
}

/// Parents-first ordering, or the link indices along a cycle.
fn topological(links: &[Link]) -> Result<Vec<usize>, Vec<usize>> {
    let mut order = Vec::with_capacity(links.len());
    let mut placed = vec![false; links.len()];
    for start in 0..links.len() {
        let mut chain = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            if placed[i] {
                break;
            }
            if let Some(pos) = chain.iter().position(|&c| c == i) {
                let mut cycle: Vec<usize> = chain[pos..].to_vec();
                cycle.reverse();
                return Err(cycle);
            }
            chain.push(i);
            cur = links[i].parent;
        }
        for &i in chain.iter().rev() {
            placed[i] = true;
            order.push(i);
        }
    }
    Ok(order)
}

pub fn load_platform(path: impl AsRef<Path>) -> Result<PlatformSpec, PlatformError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PlatformError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: PlatformFile =
        serde_json::from_str(&text).map_err(|e| PlatformError::from_json(path, e))?;
    PlatformSpec::from_file(file).map_err(|violations| PlatformError::Invalid {
        path: path.to_path_buf(),
        violations,
    })
}
