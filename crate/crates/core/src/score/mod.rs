//! Movement-score data model.
//!
//! A [`Score`] holds named [`Phrase`]s and a playlist of phrase expressions.
//! Phrases are sequences of [`Action`]s: spatial moves of a labelled body
//! part towards one of the 26 kinesphere directions, holds, and references to
//! other phrases. Durations are exact rational beats; they only become seconds
//! once a tempo is applied.

mod edit;
mod source;
pub mod transform;
mod validate;

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use nalgebra::Vector3;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use edit::{ScoreOp, SCORE_OPS};
pub use source::{PhraseSpans, SourceMap};
pub use transform::{
    concat, extent_shift, level_shift, mirror, repeat, retrograde, scale_durations, total_beats,
    total_duration, Axis, TransformError,
};
pub use validate::{validate_score, validate_score_mapped};

/// Horizontal cell of a direction, listed clockwise (seen from above) after
/// `Place`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Horizontal {
    Place,
    Fwd,
    FwdRight,
    Right,
    BackRight,
    Back,
    BackLeft,
    Left,
    FwdLeft,
}

impl Horizontal {
    pub const ALL: [Horizontal; 9] = [
        Horizontal::Place,
        Horizontal::Fwd,
        Horizontal::FwdRight,
        Horizontal::Right,
        Horizontal::BackRight,
        Horizontal::Back,
        Horizontal::BackLeft,
        Horizontal::Left,
        Horizontal::FwdLeft,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Horizontal::Place => "place",
            Horizontal::Fwd => "fwd",
            Horizontal::FwdRight => "fwd_right",
            Horizontal::Right => "right",
            Horizontal::BackRight => "back_right",
            Horizontal::Back => "back",
            Horizontal::BackLeft => "back_left",
            Horizontal::Left => "left",
            Horizontal::FwdLeft => "fwd_left",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Horizontal::ALL.into_iter().find(|h| h.keyword() == s)
    }

    /// `(x, y)` cube offset: x points right, y points forward.
    pub fn offset(self) -> (i8, i8) {
        match self {
            Horizontal::Place => (0, 0),
            Horizontal::Fwd => (0, 1),
            Horizontal::FwdRight => (1, 1),
            Horizontal::Right => (1, 0),
            Horizontal::BackRight => (1, -1),
            Horizontal::Back => (0, -1),
            Horizontal::BackLeft => (-1, -1),
            Horizontal::Left => (-1, 0),
            Horizontal::FwdLeft => (-1, 1),
        }
    }

    pub fn from_offset(x: i8, y: i8) -> Option<Self> {
        Horizontal::ALL.into_iter().find(|h| h.offset() == (x, y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Low,
    Mid,
    High,
}

impl Level {
    pub fn keyword(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Mid => "mid",
            Level::High => "high",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Level::Low),
            "mid" => Some(Level::Mid),
            "high" => Some(Level::High),
            _ => None,
        }
    }

    pub fn offset(self) -> i8 {
        match self {
            Level::Low => -1,
            Level::Mid => 0,
            Level::High => 1,
        }
    }

    pub fn from_offset(z: i8) -> Option<Self> {
        match z {
            -1 => Some(Level::Low),
            0 => Some(Level::Mid),
            1 => Some(Level::High),
            _ => None,
        }
    }
}

/// One of the 26 spatial directions of the kinesphere.
///
/// `(Place, Mid)` is the kinesphere centre and cannot be constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction {
    horizontal: Horizontal,
    level: Level,
}

impl Direction {
    pub fn new(horizontal: Horizontal, level: Level) -> Option<Self> {
        if horizontal == Horizontal::Place && level == Level::Mid {
            None
        } else {
            Some(Direction { horizontal, level })
        }
    }

    pub fn horizontal(self) -> Horizontal {
        self.horizontal
    }

    pub fn level(self) -> Level {
        self.level
    }

    /// Integer cube cell `(x, y, z)` with each component in `-1..=1`.
    pub fn offset(self) -> [i8; 3] {
        let (x, y) = self.horizontal.offset();
        [x, y, self.level.offset()]
    }

    pub fn from_offset(offset: [i8; 3]) -> Option<Self> {
        let horizontal = Horizontal::from_offset(offset[0], offset[1])?;
        let level = Level::from_offset(offset[2])?;
        Direction::new(horizontal, level)
    }

    /// Unit vector towards this direction (x right, y forward, z up).
    pub fn vector(self) -> Vector3<f64> {
        let [x, y, z] = self.offset();
        Vector3::new(f64::from(x), f64::from(y), f64::from(z)).normalize()
    }

    /// Position of this direction in [`enumerate_directions`].
    pub fn index(self) -> usize {
        let row = match self.level {
            Level::High => 0,
            Level::Mid => 9,
            Level::Low => 17,
        };
        let col = self.horizontal as usize;
        match self.level {
            Level::Mid => row + col - 1,
            _ => row + col,
        }
    }

    pub fn keyword(self) -> String {
        format!("{}_{}", self.horizontal.keyword(), self.level.keyword())
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.horizontal.keyword(), self.level.keyword())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, l) = s
            .rsplit_once('_')
            .ok_or_else(|| format!("unknown direction '{s}'"))?;
        let horizontal =
            Horizontal::from_keyword(h).ok_or_else(|| format!("unknown direction '{s}'"))?;
        let level = Level::from_keyword(l).ok_or_else(|| format!("unknown direction '{s}'"))?;
        Direction::new(horizontal, level)
            .ok_or_else(|| "place_mid is the kinesphere centre, not a direction".to_string())
    }
}

impl Serialize for Direction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Direction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 26 directions, level-major (high row, mid row, low row), each row in
/// [`Horizontal::ALL`] order.
pub fn enumerate_directions() -> Vec<Direction> {
    [Level::High, Level::Mid, Level::Low]
        .into_iter()
        .flat_map(|level| {
            Horizontal::ALL
                .into_iter()
                .filter_map(move |h| Direction::new(h, level))
        })
        .collect()
}

pub fn direction_vector(d: Direction) -> Vector3<f64> {
    d.vector()
}

/// Reach zone within the kinesphere.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Reach {
    Near,
    #[default]
    Mid,
    Far,
}

impl Reach {
    pub const ALL: [Reach; 3] = [Reach::Near, Reach::Mid, Reach::Far];

    pub fn keyword(self) -> &'static str {
        match self {
            Reach::Near => "near",
            Reach::Mid => "mid",
            Reach::Far => "far",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Reach::ALL.into_iter().find(|r| r.keyword() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Reach::ALL.get(i).copied()
    }

    /// Fraction of the kinesphere radius used when no platform override exists.
    pub fn default_scale(self) -> f64 {
        ReachScale::default().of(self)
    }
}

impl fmt::Display for Reach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Per-zone fractions of the kinesphere radius; strictly increasing, at most 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachScale(pub [f64; 3]);

impl Default for ReachScale {
    fn default() -> Self {
        ReachScale([0.33, 0.66, 1.0])
    }
}

impl ReachScale {
    pub fn of(&self, reach: Reach) -> f64 {
        self.0[reach.index()]
    }

    pub fn is_valid(&self) -> bool {
        let [n, m, f] = self.0;
        n > 0.0 && n < m && m < f && f <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    Light,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Time {
    Sustained,
    Sudden,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Indirect,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flow {
    Free,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffortFactor {
    Weight,
    Time,
    Space,
    Flow,
}

impl EffortFactor {
    pub fn keyword(self) -> &'static str {
        match self {
            EffortFactor::Weight => "weight",
            EffortFactor::Time => "time",
            EffortFactor::Space => "space",
            EffortFactor::Flow => "flow",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "weight" => Some(EffortFactor::Weight),
            "time" => Some(EffortFactor::Time),
            "space" => Some(EffortFactor::Space),
            "flow" => Some(EffortFactor::Flow),
            _ => None,
        }
    }

    pub fn poles(self) -> [&'static str; 2] {
        match self {
            EffortFactor::Weight => ["light", "strong"],
            EffortFactor::Time => ["sustained", "sudden"],
            EffortFactor::Space => ["indirect", "direct"],
            EffortFactor::Flow => ["free", "bound"],
        }
    }
}

/// A single Effort quality: one factor and one of its two poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffortQuality {
    Weight(Weight),
    Time(Time),
    Space(Space),
    Flow(Flow),
}

impl EffortQuality {
    pub fn factor(self) -> EffortFactor {
        match self {
            EffortQuality::Weight(_) => EffortFactor::Weight,
            EffortQuality::Time(_) => EffortFactor::Time,
            EffortQuality::Space(_) => EffortFactor::Space,
            EffortQuality::Flow(_) => EffortFactor::Flow,
        }
    }

    pub fn pole_keyword(self) -> &'static str {
        let poles = self.factor().poles();
        let second = match self {
            EffortQuality::Weight(w) => w == Weight::Strong,
            EffortQuality::Time(t) => t == Time::Sudden,
            EffortQuality::Space(s) => s == Space::Direct,
            EffortQuality::Flow(f) => f == Flow::Bound,
        };
        poles[usize::from(second)]
    }

    pub fn from_keywords(factor: EffortFactor, pole: &str) -> Option<Self> {
        let second = factor.poles().iter().position(|p| *p == pole)? != 0;
        Some(match factor {
            EffortFactor::Weight => EffortQuality::Weight(if second {
                Weight::Strong
            } else {
                Weight::Light
            }),
            EffortFactor::Time => EffortQuality::Time(if second { Time::Sudden } else { Time::Sustained }),
            EffortFactor::Space => EffortQuality::Space(if second {
                Space::Direct
            } else {
                Space::Indirect
            }),
            EffortFactor::Flow => EffortQuality::Flow(if second { Flow::Bound } else { Flow::Free }),
        })
    }
}

impl fmt::Display for EffortQuality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.factor().keyword(), self.pole_keyword())
    }
}

/// Set of Effort qualities holding at most one pole per factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Qualities {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weight: Option<Weight>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub time: Option<Time>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub space: Option<Space>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flow: Option<Flow>,
}

impl Qualities {
    pub fn is_empty(&self) -> bool {
        self.iter().next().is_none()
    }

    /// Sets the quality's factor, returning the pole it replaced.
    pub fn insert(&mut self, q: EffortQuality) -> Option<EffortQuality> {
        let prev = self.get(q.factor());
        match q {
            EffortQuality::Weight(w) => self.weight = Some(w),
            EffortQuality::Time(t) => self.time = Some(t),
            EffortQuality::Space(s) => self.space = Some(s),
            EffortQuality::Flow(f) => self.flow = Some(f),
        }
        prev
    }

    pub fn get(&self, factor: EffortFactor) -> Option<EffortQuality> {
        match factor {
            EffortFactor::Weight => self.weight.map(EffortQuality::Weight),
            EffortFactor::Time => self.time.map(EffortQuality::Time),
            EffortFactor::Space => self.space.map(EffortQuality::Space),
            EffortFactor::Flow => self.flow.map(EffortQuality::Flow),
        }
    }

    pub fn contains(&self, q: EffortQuality) -> bool {
        self.get(q.factor()) == Some(q)
    }

    /// Qualities in factor order: weight, time, space, flow.
    pub fn iter(&self) -> impl Iterator<Item = EffortQuality> + '_ {
        [
            EffortFactor::Weight,
            EffortFactor::Time,
            EffortFactor::Space,
            EffortFactor::Flow,
        ]
        .into_iter()
        .filter_map(|f| self.get(f))
    }

    /// Fills factors missing here from `fallback`; existing poles win.
    pub fn fill_from(&mut self, fallback: &Qualities) {
        self.weight = self.weight.or(fallback.weight);
        self.time = self.time.or(fallback.time);
        self.space = self.space.or(fallback.space);
        self.flow = self.flow.or(fallback.flow);
    }

    pub fn intersection(&self, other: &Qualities) -> Qualities {
        Qualities {
            weight: self.weight.filter(|w| other.weight == Some(*w)),
            time: self.time.filter(|t| other.time == Some(*t)),
            space: self.space.filter(|s| other.space == Some(*s)),
            flow: self.flow.filter(|f| other.flow == Some(*f)),
        }
    }
}

impl FromIterator<EffortQuality> for Qualities {
    fn from_iter<I: IntoIterator<Item = EffortQuality>>(iter: I) -> Self {
        let mut q = Qualities::default();
        for item in iter {
            q.insert(item);
        }
        q
    }
}

/// Strictly positive rational number of beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Beats(Ratio<i64>);

impl Beats {
    pub fn new(numer: i64, denom: i64) -> Option<Self> {
        if denom == 0 {
            return None;
        }
        Self::from_ratio(Ratio::new(numer, denom))
    }

    pub fn whole(n: i64) -> Option<Self> {
        Self::new(n, 1)
    }

    pub fn from_ratio(r: Ratio<i64>) -> Option<Self> {
        (r > Ratio::zero()).then_some(Beats(r))
    }

    /// Closest small rational to a positive finite float (continued fractions).
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x <= 0.0 {
            return None;
        }
        Ratio::<i64>::approximate_float(x).and_then(Self::from_ratio)
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(self) -> i64 {
        *self.0.denom()
    }

    pub fn as_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn recip(self) -> Beats {
        Beats(self.0.recip())
    }

    pub fn checked_mul(self, other: Beats) -> Option<Beats> {
        num_traits::CheckedMul::checked_mul(&self.0, &other.0).map(Beats)
    }

    pub fn checked_add(self, other: Beats) -> Option<Beats> {
        num_traits::CheckedAdd::checked_add(&self.0, &other.0).map(Beats)
    }
}

impl fmt::Display for Beats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom() == 1 {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Beats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("invalid beat count '{s}'"))
        };
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (parse(n)?, parse(d)?),
            None => (parse(s)?, 1),
        };
        Beats::new(n, d).ok_or_else(|| format!("beat count '{s}' must be positive"))
    }
}

impl Serialize for Beats {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Beats {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Platform body-part label, e.g. `arm` or `right_hand`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BodyLabel(pub String);

impl BodyLabel {
    pub fn new(s: impl Into<String>) -> Self {
        BodyLabel(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Swaps `left` and `right` words in an underscore-separated label.
    pub fn mirrored(&self) -> BodyLabel {
        let words: Vec<&str> = self
            .0
            .split('_')
            .map(|w| match w {
                "left" => "right",
                "right" => "left",
                other => other,
            })
            .collect();
        BodyLabel(words.join("_"))
    }
}

impl fmt::Display for BodyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    pub label: BodyLabel,
    pub direction: Direction,
    pub reach: Reach,
    pub beats: Beats,
    pub qualities: Qualities,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Move(Move),
    Hold { beats: Beats },
    PhraseRef { name: String },
}

impl Action {
    pub fn beats(&self) -> Option<Beats> {
        match self {
            Action::Move(m) => Some(m.beats),
            Action::Hold { beats } => Some(*beats),
            Action::PhraseRef { .. } => None,
        }
    }
}

/// Qualities applied to a contiguous action range `start..end` (0-based,
/// half-open).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Theme {
    pub qualities: Qualities,
    pub start: usize,
    pub end: usize,
}

impl Theme {
    pub fn covers(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phrase {
    pub name: String,
    pub actions: Vec<Action>,
    pub themes: Vec<Theme>,
}

impl Phrase {
    pub fn new(name: impl Into<String>, actions: Vec<Action>) -> Self {
        Phrase {
            name: name.into(),
            actions,
            themes: Vec::new(),
        }
    }
}

/// A playlist entry: a phrase name wrapped in zero or more transform calls.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PlayExpr {
    Phrase(String),
    Retrograde(Box<PlayExpr>),
    Mirror(Box<PlayExpr>, Axis),
    Scale(Box<PlayExpr>, Beats),
    Level(Box<PlayExpr>, i32),
    Extent(Box<PlayExpr>, i32),
    Repeat(Box<PlayExpr>, u32),
    Concat(Box<PlayExpr>, Box<PlayExpr>),
}

impl PlayExpr {
    pub fn phrase(name: impl Into<String>) -> Self {
        PlayExpr::Phrase(name.into())
    }

    /// Phrase names referenced by this expression, left to right.
    pub fn phrase_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            PlayExpr::Phrase(n) => out.push(n),
            PlayExpr::Retrograde(e)
            | PlayExpr::Mirror(e, _)
            | PlayExpr::Scale(e, _)
            | PlayExpr::Level(e, _)
            | PlayExpr::Extent(e, _)
            | PlayExpr::Repeat(e, _) => e.collect_names(out),
            PlayExpr::Concat(a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }
}

pub const DEFAULT_TEMPO: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    /// Beats per minute.
    pub tempo: f64,
    pub platform: Option<String>,
    pub phrases: IndexMap<String, Phrase>,
    pub playlist: Vec<PlayExpr>,
}

impl Default for Score {
    fn default() -> Self {
        Score {
            tempo: DEFAULT_TEMPO,
            platform: None,
            phrases: IndexMap::new(),
            playlist: Vec::new(),
        }
    }
}

impl Score {
    pub fn add_phrase(&mut self, phrase: Phrase) -> Option<Phrase> {
        self.phrases.insert(phrase.name.clone(), phrase)
    }

    pub fn phrase(&self, name: &str) -> Option<&Phrase> {
        self.phrases.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_six_directions_level_major() {
        let dirs = enumerate_directions();
        assert_eq!(dirs.len(), 26);
        assert_eq!(dirs.len(), 9 * 3 - 1);
        let place_high = Direction::new(Horizontal::Place, Level::High).unwrap();
        let place_low = Direction::new(Horizontal::Place, Level::Low).unwrap();
        assert!(dirs.contains(&place_high));
        assert!(dirs.contains(&place_low));
        assert!(Direction::new(Horizontal::Place, Level::Mid).is_none());
        assert_eq!(dirs[0], place_high);
        assert!(dirs[..9].iter().all(|d| d.level() == Level::High));
        assert!(dirs[9..17].iter().all(|d| d.level() == Level::Mid));
        assert!(dirs[17..].iter().all(|d| d.level() == Level::Low));
        for (i, d) in dirs.iter().enumerate() {
            assert_eq!(d.index(), i);
        }
    }

    #[test]
    fn direction_vectors() {
        let up = Direction::new(Horizontal::Place, Level::High).unwrap();
        assert_eq!(direction_vector(up), Vector3::new(0.0, 0.0, 1.0));
        let fh = Direction::new(Horizontal::Fwd, Level::High).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((direction_vector(fh) - Vector3::new(0.0, s, s)).norm() < 1e-15);
        let sum: Vector3<f64> = enumerate_directions().into_iter().map(direction_vector).sum();
        assert!(sum.norm() < 1e-12);
        let offsets: [i32; 3] = enumerate_directions().iter().fold([0; 3], |mut acc, d| {
            for (a, o) in acc.iter_mut().zip(d.offset()) {
                *a += i32::from(o);
            }
            acc
        });
        assert_eq!(offsets, [0, 0, 0]);
    }

    #[test]
    fn direction_keywords_round_trip() {
        for d in enumerate_directions() {
            assert_eq!(d.keyword().parse::<Direction>().unwrap(), d);
        }
        assert!("place_mid".parse::<Direction>().is_err());
        assert!("up_high".parse::<Direction>().is_err());
        assert_eq!(
            "fwd_right_low".parse::<Direction>().unwrap().offset(),
            [1, 1, -1]
        );
    }

    #[test]
    fn reach_scales_increase() {
        assert!(ReachScale::default().is_valid());
        assert!(Reach::Near.default_scale() < Reach::Mid.default_scale());
        assert!(Reach::Mid.default_scale() < Reach::Far.default_scale());
        assert!(Reach::Far.default_scale() <= 1.0);
    }

    #[test]
    fn beats_parse_and_print() {
        assert_eq!("3/2".parse::<Beats>().unwrap().to_string(), "3/2");
        assert_eq!("4/2".parse::<Beats>().unwrap().to_string(), "2");
        assert!("0".parse::<Beats>().is_err());
        assert!("1/0".parse::<Beats>().is_err());
        assert_eq!(Beats::from_f64(1.0 / 3.0).unwrap(), Beats::new(1, 3).unwrap());
        assert!(Beats::from_f64(-1.0).is_none());
        assert!(Beats::from_f64(f64::NAN).is_none());
        assert!(Beats::from_f64(f64::INFINITY).is_none());
    }

    #[test]
    fn qualities_one_pole_per_factor() {
        let mut q = Qualities::default();
        assert!(q.insert(EffortQuality::Time(Time::Sudden)).is_none());
        assert_eq!(
            q.insert(EffortQuality::Time(Time::Sustained)),
            Some(EffortQuality::Time(Time::Sudden))
        );
        assert_eq!(q.iter().count(), 1);
        for factor in [
            EffortFactor::Weight,
            EffortFactor::Time,
            EffortFactor::Space,
            EffortFactor::Flow,
        ] {
            for pole in factor.poles() {
                let eq = EffortQuality::from_keywords(factor, pole).unwrap();
                assert_eq!(eq.factor(), factor);
                assert_eq!(eq.pole_keyword(), pole);
            }
            assert!(EffortQuality::from_keywords(factor, "medium").is_none());
        }
    }

    #[test]
    fn label_mirroring() {
        assert_eq!(BodyLabel::new("right_hand").mirrored().as_str(), "left_hand");
        assert_eq!(BodyLabel::new("arm").mirrored().as_str(), "arm");
        assert_eq!(BodyLabel::new("upright").mirrored().as_str(), "upright");
    }
}
