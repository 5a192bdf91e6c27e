//! proptest generators for scores and phrases, shared by the test suites.

use proptest::prelude::*;

use crate::score::{
    enumerate_directions, Action, Axis, Beats, BodyLabel, Direction, EffortQuality, Flow, Move,
    Phrase, PlayExpr, Qualities, Reach, Score, Space, Theme, Time, Weight,
};

pub const LABELS: [&str; 5] = ["arm", "forearm", "left_arm", "right_arm", "head"];

pub fn direction() -> impl Strategy<Value = Direction> {
    let all = enumerate_directions();
    (0..all.len()).prop_map(move |i| all[i])
}

pub fn reach() -> impl Strategy<Value = Reach> {
    prop_oneof![Just(Reach::Near), Just(Reach::Mid), Just(Reach::Far)]
}

pub fn beats() -> impl Strategy<Value = Beats> {
    (1i64..=16, 1i64..=8).prop_map(|(n, d)| Beats::new(n, d).expect("positive"))
}

pub fn qualities() -> impl Strategy<Value = Qualities> {
    (
        prop::option::of(prop_oneof![Just(Weight::Light), Just(Weight::Strong)]),
        prop::option::of(prop_oneof![Just(Time::Sudden), Just(Time::Sustained)]),
        prop::option::of(prop_oneof![Just(Space::Direct), Just(Space::Indirect)]),
        prop::option::of(prop_oneof![Just(Flow::Free), Just(Flow::Bound)]),
    )
        .prop_map(|(w, t, s, f)| {
            let mut q = Qualities::default();
            w.map(|w| q.insert(EffortQuality::Weight(w)));
            t.map(|t| q.insert(EffortQuality::Time(t)));
            s.map(|s| q.insert(EffortQuality::Space(s)));
            f.map(|f| q.insert(EffortQuality::Flow(f)));
            q
        })
}

fn nonempty_qualities() -> impl Strategy<Value = Qualities> {
    qualities().prop_filter("theme needs a quality", |q| !q.is_empty())
}

pub fn movement() -> impl Strategy<Value = Move> {
    (0..LABELS.len(), direction(), reach(), beats(), qualities()).prop_map(
        |(l, direction, reach, beats, qualities)| Move {
            label: BodyLabel::new(LABELS[l]),
            direction,
            reach,
            beats,
            qualities,
        },
    )
}

/// A move or a hold, never a phrase reference.
pub fn plain_action() -> impl Strategy<Value = Action> {
    prop_oneof![
        4 => movement().prop_map(Action::Move),
        1 => beats().prop_map(|beats| Action::Hold { beats }),
    ]
}

fn themes(len: usize) -> BoxedStrategy<Vec<Theme>> {
    if len == 0 {
        return Just(Vec::new()).boxed();
    }
    prop::collection::vec(
        (0..len, 1..=len, nonempty_qualities()).prop_map(move |(start, span, qualities)| Theme {
            qualities,
            start,
            end: (start + span).min(len),
        }),
        0..3,
    )
    .boxed()
}

fn with_themes(name: String, actions: Vec<Action>) -> impl Strategy<Value = Phrase> {
    themes(actions.len()).prop_map(move |themes| Phrase {
        name: name.clone(),
        actions: actions.clone(),
        themes,
    })
}

/// A phrase of moves and holds with optional themes.
pub fn phrase() -> impl Strategy<Value = Phrase> {
    prop::collection::vec(plain_action(), 0..12)
        .prop_flat_map(|actions| with_themes("p".to_string(), actions))
}

/// A phrase with at least one action.
pub fn nonempty_phrase() -> impl Strategy<Value = Phrase> {
    prop::collection::vec(plain_action(), 1..12)
        .prop_flat_map(|actions| with_themes("p".to_string(), actions))
}

fn axis() -> impl Strategy<Value = Axis> {
    prop_oneof![Just(Axis::X), Just(Axis::Y), Just(Axis::Z)]
}

fn play_expr(phrases: usize) -> impl Strategy<Value = PlayExpr> {
    let leaf = (0..phrases).prop_map(|i| PlayExpr::phrase(format!("p{i}")));
    leaf.prop_recursive(3, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| PlayExpr::Retrograde(Box::new(e))),
            (inner.clone(), axis()).prop_map(|(e, a)| PlayExpr::Mirror(Box::new(e), a)),
            (inner.clone(), beats()).prop_map(|(e, k)| PlayExpr::Scale(Box::new(e), k)),
            (inner.clone(), -2i32..=2).prop_map(|(e, n)| PlayExpr::Level(Box::new(e), n)),
            (inner.clone(), -2i32..=2).prop_map(|(e, n)| PlayExpr::Extent(Box::new(e), n)),
            (inner.clone(), 1u32..=3).prop_map(|(e, n)| PlayExpr::Repeat(Box::new(e), n)),
            (inner.clone(), inner).prop_map(|(a, b)| PlayExpr::Concat(Box::new(a), Box::new(b))),
        ]
    })
}

/// A valid score: phrases `p0..pn`, where `pi` may only `use` phrases with a
/// higher index, and a playlist over them.
pub fn score() -> impl Strategy<Value = Score> {
    (1usize..5).prop_flat_map(|n| {
        let phrases: Vec<_> = (0..n)
            .map(|i| {
                let action = if i + 1 < n {
                    prop_oneof![
                        5 => plain_action(),
                        1 => ((i + 1)..n).prop_map(|j| Action::PhraseRef { name: format!("p{j}") }),
                    ]
                    .boxed()
                } else {
                    plain_action().boxed()
                };
                prop::collection::vec(action, 0..8)
                    .prop_flat_map(move |actions| with_themes(format!("p{i}"), actions))
            })
            .collect();
        (
            phrases,
            prop::collection::vec(play_expr(n), 0..4),
            prop_oneof![
                Just(None),
                Just(Some("arm3.eurdf.json".to_string())),
                Just(Some("dir with \"quotes\"/x.json".to_string())),
            ],
            prop_oneof![(20u32..=240).prop_map(f64::from), (40u32..480).prop_map(|h| f64::from(h) / 2.0)],
        )
            .prop_map(|(phrases, playlist, platform, tempo)| {
                let mut s = Score {
                    tempo,
                    platform,
                    playlist,
                    ..Score::default()
                };
                for p in phrases {
                    s.add_phrase(p);
                }
                s
            })
    })
}
