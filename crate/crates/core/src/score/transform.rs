//! Choreographic transforms over phrases.
//!
//! All transforms are pure: they return a new phrase and leave the input
//! untouched. Level and extent shifts saturate at the extremes and report each
//! saturated action as a warning instead of failing.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{Action, Beats, Direction, Horizontal, Level, Phrase, Reach, Theme};
use crate::diag::Diagnostic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn keyword(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            _ => Err(format!("unknown axis '{s}' (expected x, y or z)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidFactor(f64),
    #[error("repeat count must be at least 1")]
    ZeroRepeat,
    #[error("beat arithmetic overflowed")]
    Overflow,
}

/// Plays the actions in reverse order.
pub fn retrograde(p: &Phrase) -> Phrase {
    let n = p.actions.len();
    Phrase {
        name: p.name.clone(),
        actions: p.actions.iter().rev().cloned().collect(),
        themes: p
            .themes
            .iter()
            .map(|t| Theme {
                qualities: t.qualities,
                start: n.saturating_sub(t.end),
                end: n.saturating_sub(t.start),
            })
            .collect(),
    }
}

fn mirror_direction(d: Direction, axis: Axis) -> Direction {
    let mut offset = d.offset();
    let i = match axis {
        Axis::X => 0,
        Axis::Y => 1,
        Axis::Z => 2,
    };
    offset[i] = -offset[i];
    // Negating one component of a valid cell never yields the centre.
    Direction::from_offset(offset).unwrap_or(d)
}

/// Reflects every move across the plane normal to `axis`. Mirroring across x
/// also swaps left/right body labels.
pub fn mirror(p: &Phrase, axis: Axis) -> Phrase {
    let actions = p
        .actions
        .iter()
        .map(|a| match a {
            Action::Move(m) => {
                let mut m = m.clone();
                m.direction = mirror_direction(m.direction, axis);
                if axis == Axis::X {
                    m.label = m.label.mirrored();
                }
                Action::Move(m)
            }
            other => other.clone(),
        })
        .collect();
    Phrase {
        name: p.name.clone(),
        actions,
        themes: p.themes.clone(),
    }
}

/// Multiplies every duration by `k`.
pub fn scale_durations(p: &Phrase, k: Beats) -> Result<Phrase, TransformError> {
    let actions = p
        .actions
        .iter()
        .map(|a| {
            Ok(match a {
                Action::Move(m) => {
                    let mut m = m.clone();
                    m.beats = m.beats.checked_mul(k).ok_or(TransformError::Overflow)?;
                    Action::Move(m)
                }
                Action::Hold { beats } => Action::Hold {
                    beats: beats.checked_mul(k).ok_or(TransformError::Overflow)?,
                },
                other => other.clone(),
            })
        })
        .collect::<Result<_, TransformError>>()?;
    Ok(Phrase {
        name: p.name.clone(),
        actions,
        themes: p.themes.clone(),
    })
}

/// Like [`scale_durations`] for a float factor, which is first converted to
/// the nearest small rational.
pub fn scale_durations_f64(p: &Phrase, k: f64) -> Result<Phrase, TransformError> {
    let k = Beats::from_f64(k).ok_or(TransformError::InvalidFactor(k))?;
    scale_durations(p, k)
}

fn level_rank(l: Level) -> i64 {
    match l {
        Level::Low => 0,
        Level::Mid => 1,
        Level::High => 2,
    }
}

fn rank_level(r: i64) -> Level {
    match r {
        i64::MIN..=0 => Level::Low,
        1 => Level::Mid,
        _ => Level::High,
    }
}

/// Raises (positive `steps`) or lowers every move's level, saturating at
/// high/low.
pub fn level_shift(p: &Phrase, steps: i32) -> (Phrase, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let actions = p
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            Action::Move(m) => {
                let mut m = m.clone();
                let from = m.direction.level();
                let wanted = level_rank(from) + i64::from(steps);
                let clamped = wanted.clamp(0, 2);
                if clamped != wanted {
                    diags.push(Diagnostic::warning(format!(
                        "phrase '{}' action {}: level shift clamped at {}",
                        p.name,
                        i + 1,
                        rank_level(clamped).keyword()
                    )));
                }
                let mut level = rank_level(clamped);
                if m.direction.horizontal() == Horizontal::Place && level == Level::Mid {
                    // Stay on the side of the centre the move started from.
                    level = if from == Level::Mid { Level::High } else { from };
                    diags.push(Diagnostic::warning(format!(
                        "phrase '{}' action {}: place_mid is the kinesphere centre; kept place_{}",
                        p.name,
                        i + 1,
                        level.keyword()
                    )));
                }
                m.direction = Direction::new(m.direction.horizontal(), level)
                    .unwrap_or(m.direction);
                Action::Move(m)
            }
            other => other.clone(),
        })
        .collect();
    (
        Phrase {
            name: p.name.clone(),
            actions,
            themes: p.themes.clone(),
        },
        diags,
    )
}

/// Extends (positive `steps`) or contracts every move's reach zone,
/// saturating at far/near.
pub fn extent_shift(p: &Phrase, steps: i32) -> (Phrase, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let actions = p
        .actions
        .iter()
        .enumerate()
        .map(|(i, a)| match a {
            Action::Move(m) => {
                let mut m = m.clone();
                let wanted = m.reach.index() as i64 + i64::from(steps);
                let clamped = wanted.clamp(0, 2);
                m.reach = Reach::from_index(clamped as usize).unwrap_or(m.reach);
                if clamped != wanted {
                    diags.push(Diagnostic::warning(format!(
                        "phrase '{}' action {}: extent shift clamped at {}",
                        p.name,
                        i + 1,
                        m.reach
                    )));
                }
                Action::Move(m)
            }
            other => other.clone(),
        })
        .collect();
    (
        Phrase {
            name: p.name.clone(),
            actions,
            themes: p.themes.clone(),
        },
        diags,
    )
}

/// Tiles the phrase `n` times; themes are tiled with it.
pub fn repeat(p: &Phrase, n: u32) -> Result<Phrase, TransformError> {
    if n == 0 {
        return Err(TransformError::ZeroRepeat);
    }
    let len = p.actions.len();
    let mut actions = Vec::with_capacity(len * n as usize);
    let mut themes = Vec::with_capacity(p.themes.len() * n as usize);
    for k in 0..n as usize {
        actions.extend(p.actions.iter().cloned());
        themes.extend(p.themes.iter().map(|t| Theme {
            qualities: t.qualities,
            start: t.start + k * len,
            end: t.end + k * len,
        }));
    }
    Ok(Phrase {
        name: p.name.clone(),
        actions,
        themes,
    })
}

/// `a` followed by `b`. The result is named `a+b`.
pub fn concat(a: &Phrase, b: &Phrase) -> Phrase {
    let offset = a.actions.len();
    Phrase {
        name: format!("{}+{}", a.name, b.name),
        actions: a.actions.iter().chain(&b.actions).cloned().collect(),
        themes: a
            .themes
            .iter()
            .cloned()
            .chain(b.themes.iter().map(|t| Theme {
                qualities: t.qualities,
                start: t.start + offset,
                end: t.end + offset,
            }))
            .collect(),
    }
}

/// Sum of the phrase's own move and hold durations, or `None` on overflow or
/// for a phrase with no timed actions. Phrase references contribute nothing;
/// resolve them first to time a whole phrase tree.
pub fn total_beats(p: &Phrase) -> Option<Beats> {
    let mut it = p.actions.iter().filter_map(Action::beats);
    let first = it.next()?;
    it.try_fold(first, Beats::checked_add)
}

/// Seconds taken by the phrase's own timed actions at `tempo` beats per minute.
pub fn total_duration(p: &Phrase, tempo: f64) -> f64 {
    let beats: f64 = p
        .actions
        .iter()
        .filter_map(Action::beats)
        .map(Beats::as_f64)
        .sum();
    beats * 60.0 / tempo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{BodyLabel, EffortQuality, Move, Qualities, Time};

    fn dir(s: &str) -> Direction {
        s.parse().unwrap()
    }

    fn mv(label: &str, d: &str, beats: i64) -> Action {
        Action::Move(Move {
            label: BodyLabel::new(label),
            direction: dir(d),
            reach: Reach::Mid,
            beats: Beats::whole(beats).unwrap(),
            qualities: Qualities::default(),
        })
    }

    fn hold(beats: i64) -> Action {
        Action::Hold {
            beats: Beats::whole(beats).unwrap(),
        }
    }

    fn durations(p: &Phrase) -> Vec<String> {
        p.actions
            .iter()
            .filter_map(Action::beats)
            .map(|b| b.to_string())
            .collect()
    }

    #[test]
    fn retrograde_reverses() {
        let p = Phrase::new(
            "p",
            vec![mv("arm", "fwd_mid", 1), mv("arm", "right_mid", 2), hold(3)],
        );
        let r = retrograde(&p);
        assert_eq!(r.actions[0], hold(3));
        assert_eq!(r.actions[2], mv("arm", "fwd_mid", 1));
        assert_eq!(retrograde(&r), p);
        let single = Phrase::new("s", vec![mv("arm", "fwd_mid", 1)]);
        assert_eq!(retrograde(&single), single);
    }

    #[test]
    fn retrograde_remaps_themes() {
        let mut p = Phrase::new(
            "p",
            vec![mv("a", "fwd_mid", 1), mv("a", "fwd_mid", 1), mv("a", "fwd_mid", 1)],
        );
        p.themes.push(Theme {
            qualities: [EffortQuality::Time(Time::Sudden)].into_iter().collect(),
            start: 0,
            end: 2,
        });
        let r = retrograde(&p);
        assert_eq!((r.themes[0].start, r.themes[0].end), (1, 3));
    }

    #[test]
    fn mirror_x_swaps_sides_and_labels() {
        let p = Phrase::new("p", vec![mv("right_hand", "right_mid", 1), hold(2)]);
        let m = mirror(&p, Axis::X);
        assert_eq!(m.actions[0], mv("left_hand", "left_mid", 1));
        assert_eq!(m.actions[1], hold(2));
        assert_eq!(mirror(&m, Axis::X), p);
    }

    #[test]
    fn mirror_y_and_z() {
        let p = Phrase::new("p", vec![mv("arm", "fwd_right_high", 1)]);
        assert_eq!(mirror(&p, Axis::Y).actions[0], mv("arm", "back_right_high", 1));
        assert_eq!(mirror(&p, Axis::Z).actions[0], mv("arm", "fwd_right_low", 1));
        let up = Phrase::new("p", vec![mv("arm", "place_high", 1)]);
        assert_eq!(mirror(&up, Axis::Z).actions[0], mv("arm", "place_low", 1));
    }

    #[test]
    fn scaling() {
        let p = Phrase::new("p", vec![mv("arm", "fwd_mid", 1), hold(2)]);
        let two = Beats::whole(2).unwrap();
        assert_eq!(durations(&scale_durations(&p, two).unwrap()), ["2", "4"]);
        assert_eq!(scale_durations(&p, Beats::whole(1).unwrap()).unwrap(), p);
        let back = scale_durations(&scale_durations(&p, two).unwrap(), two.recip()).unwrap();
        assert_eq!(back, p);
        assert_eq!(
            scale_durations_f64(&p, 0.0),
            Err(TransformError::InvalidFactor(0.0))
        );
        assert!(scale_durations_f64(&p, -2.0).is_err());
        assert!(scale_durations_f64(&p, f64::NAN).is_err());
        assert_eq!(durations(&scale_durations_f64(&p, 0.5).unwrap()), ["1/2", "1"]);
    }

    #[test]
    fn level_shift_clamps() {
        let p = Phrase::new("p", vec![mv("arm", "fwd_mid", 1)]);
        let (up, d) = level_shift(&p, 1);
        assert_eq!(up.actions[0], mv("arm", "fwd_high", 1));
        assert!(d.is_empty());
        let (up2, d) = level_shift(&up, 1);
        assert_eq!(up2.actions[0], mv("arm", "fwd_high", 1));
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("clamped"));
    }

    #[test]
    fn level_shift_avoids_centre() {
        let p = Phrase::new("p", vec![mv("arm", "place_high", 1)]);
        let (down, d) = level_shift(&p, -1);
        assert_eq!(down.actions[0], mv("arm", "place_high", 1));
        assert_eq!(d.len(), 1);
        let (down2, d) = level_shift(&p, -2);
        assert_eq!(down2.actions[0], mv("arm", "place_low", 1));
        assert!(d.is_empty());
        let low = Phrase::new("p", vec![mv("arm", "place_low", 1)]);
        assert_eq!(level_shift(&low, 1).0.actions[0], mv("arm", "place_low", 1));
    }

    #[test]
    fn extent_shift_clamps() {
        let p = Phrase::new("p", vec![mv("arm", "fwd_mid", 1), hold(1)]);
        let (far, d) = extent_shift(&p, 1);
        match &far.actions[0] {
            Action::Move(m) => assert_eq!(m.reach, Reach::Far),
            _ => unreachable!(),
        }
        assert!(d.is_empty());
        let (near, d) = extent_shift(&p, -5);
        match &near.actions[0] {
            Action::Move(m) => assert_eq!(m.reach, Reach::Near),
            _ => unreachable!(),
        }
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn repeat_and_concat() {
        let a = Phrase::new("a", vec![mv("arm", "fwd_mid", 1)]);
        let r = repeat(&a, 3).unwrap();
        assert_eq!(r.actions, vec![a.actions[0].clone(); 3]);
        assert_eq!(repeat(&a, 1).unwrap(), a);
        assert_eq!(repeat(&a, 0), Err(TransformError::ZeroRepeat));
        let b = Phrase::new("b", vec![hold(2), hold(1)]);
        let c = concat(&a, &b);
        assert_eq!(
            total_beats(&c).unwrap(),
            total_beats(&a).unwrap().checked_add(total_beats(&b).unwrap()).unwrap()
        );
    }

    #[test]
    fn durations_in_seconds() {
        let p = Phrase::new("p", vec![hold(1), hold(2), hold(1)]);
        assert_eq!(total_duration(&p, 60.0), 4.0);
        assert_eq!(total_duration(&p, 120.0), 2.0);
        assert_eq!(total_duration(&Phrase::new("e", vec![]), 60.0), 0.0);
    }
}
