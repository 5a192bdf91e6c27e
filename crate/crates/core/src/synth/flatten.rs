use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::score::{
    concat, extent_shift, level_shift, mirror, repeat, retrograde, scale_durations, Action, Beats,
    BodyLabel, Direction, Move, Phrase, PlayExpr, Qualities, Reach, Score, TransformError,
};

/// One step of a flattened playlist: what to do, where, for how long, and how.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceEntry {
    Move {
        label: BodyLabel,
        direction: Direction,
        reach: Reach,
        beats: Beats,
        #[serde(default)]
        qualities: Qualities,
    },
    Hold {
        beats: Beats,
    },
}

impl TraceEntry {
    pub fn beats(&self) -> Beats {
        match self {
            TraceEntry::Move { beats, .. } | TraceEntry::Hold { beats } => *beats,
        }
    }
}

/// The platform-independent form of a compiled score.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolicTrace(pub Vec<TraceEntry>);

impl SymbolicTrace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.0
    }

    pub fn total_beats(&self) -> Option<Beats> {
        let mut it = self.0.iter().map(TraceEntry::beats);
        let first = it.next()?;
        it.try_fold(first, |acc, b| acc.checked_add(b))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlattenError {
    #[error("playlist refers to unknown phrase '{0}'")]
    UnknownPhrase(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Expands the playlist into a trace. The score must be valid.
pub fn flatten(s: &Score) -> Result<SymbolicTrace, FlattenError> {
    flatten_with_warnings(s).map(|(t, _)| t)
}

/// As [`flatten`], also returning the clamping warnings of level and extent
/// shifts.
pub fn flatten_with_warnings(s: &Score) -> Result<(SymbolicTrace, Vec<Diagnostic>), FlattenError> {
    let mut warnings = Vec::new();
    let mut entries = Vec::new();
    for expr in &s.playlist {
        let phrase = eval(s, expr, &mut warnings)?;
        for a in phrase.actions {
            entries.push(match a {
                Action::Move(m) => TraceEntry::Move {
                    label: m.label,
                    direction: m.direction,
                    reach: m.reach,
                    beats: m.beats,
                    qualities: m.qualities,
                },
                Action::Hold { beats } => TraceEntry::Hold { beats },
                Action::PhraseRef { .. } => unreachable!("references are expanded"),
            });
        }
    }
    Ok((SymbolicTrace(entries), warnings))
}

fn eval(s: &Score, e: &PlayExpr, warnings: &mut Vec<Diagnostic>) -> Result<Phrase, FlattenError> {
    Ok(match e {
        PlayExpr::Phrase(name) => Phrase::new(name.clone(), expand(s, name, 0)?),
        PlayExpr::Retrograde(e) => retrograde(&eval(s, e, warnings)?),
        PlayExpr::Mirror(e, axis) => mirror(&eval(s, e, warnings)?, *axis),
        PlayExpr::Scale(e, k) => scale_durations(&eval(s, e, warnings)?, *k)?,
        PlayExpr::Level(e, n) => {
            let (p, d) = level_shift(&eval(s, e, warnings)?, *n);
            warnings.extend(d);
            p
        }
        PlayExpr::Extent(e, n) => {
            let (p, d) = extent_shift(&eval(s, e, warnings)?, *n);
            warnings.extend(d);
            p
        }
        PlayExpr::Repeat(e, n) => repeat(&eval(s, e, warnings)?, *n)?,
        PlayExpr::Concat(a, b) => concat(&eval(s, a, warnings)?, &eval(s, b, warnings)?),
    })
}

/// Inlines `use` references and resolves themes into per-move qualities. A
/// move's own qualities win over its phrase's themes, which win over the
/// themes of any phrase that uses it.
fn expand(s: &Score, name: &str, depth: usize) -> Result<Vec<Action>, FlattenError> {
    let phrase = s
        .phrase(name)
        .ok_or_else(|| FlattenError::UnknownPhrase(name.to_string()))?;
    // Validation rejects cycles; the bound keeps an invalid score from
    // recursing forever.
    if depth > s.phrases.len() {
        return Err(FlattenError::UnknownPhrase(name.to_string()));
    }
    let mut out = Vec::new();
    for (i, action) in phrase.actions.iter().enumerate() {
        let mut produced = match action {
            Action::PhraseRef { name } => expand(s, name, depth + 1)?,
            other => vec![other.clone()],
        };
        for theme in phrase.themes.iter().filter(|t| t.covers(i)) {
            for a in &mut produced {
                if let Action::Move(Move { qualities, .. }) = a {
                    qualities.fill_from(&theme.qualities);
                }
            }
        }
        out.extend(produced);
    }
    Ok(out)
}
