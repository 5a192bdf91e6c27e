use std::collections::HashSet;

use super::printer::print_qualities;
use crate::diag::Diagnostic;
use crate::score::{Action, Qualities, Score, SourceMap};

/// Style warnings for a valid score.
///
/// - phrases that are never played, directly or through `use`
/// - phrases with no actions
/// - phrases where every action is a move carrying the same quality, which a
///   theme expresses once
///
/// The playlist has no non-terminating construct, so no entry can be
/// unreachable.
pub fn lint(s: &Score) -> Vec<Diagnostic> {
    run(s, None)
}

pub fn lint_mapped(s: &Score, map: &SourceMap) -> Vec<Diagnostic> {
    run(s, Some(map))
}

fn run(s: &Score, map: Option<&SourceMap>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let played = played_phrases(s);

    for (name, phrase) in &s.phrases {
        let span = map.and_then(|m| m.phrase(name));
        if !played.contains(name.as_str()) {
            out.push(Diagnostic::warning(format!("unused phrase '{name}'")).with_span(span));
        }
        if phrase.actions.is_empty() {
            out.push(Diagnostic::warning(format!("empty phrase '{name}'")).with_span(span));
        }
        if let Some(shared) = shared_qualities(&phrase.actions) {
            out.push(
                Diagnostic::warning(format!(
                    "every action in phrase '{name}' carries {}; consider a theme",
                    print_qualities(&shared)
                ))
                .with_span(span),
            );
        }
    }
    out
}

/// Qualities common to every action, when the phrase has at least two
/// actions, all of them moves, and they share at least one quality.
pub(crate) fn shared_qualities(actions: &[Action]) -> Option<Qualities> {
    if actions.len() < 2 {
        return None;
    }
    let mut moves = actions.iter().map(|a| match a {
        Action::Move(m) => Some(m.qualities),
        _ => None,
    });
    let first = moves.next()??;
    let shared = moves.try_fold(first, |acc, q| q.map(|q| acc.intersection(&q)))?;
    (!shared.is_empty()).then_some(shared)
}

fn played_phrases(s: &Score) -> HashSet<&str> {
    let mut seen = HashSet::new();
    let mut stack: Vec<&str> = s
        .playlist
        .iter()
        .flat_map(|e| e.phrase_names())
        .collect();
    while let Some(name) = stack.pop() {
        if !seen.insert(name) {
            continue;
        }
        if let Some(p) = s.phrases.get(name) {
            for a in &p.actions {
                if let Action::PhraseRef { name } = a {
                    stack.push(name);
                }
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{parse, parse_with, ParseOptions};

    #[test]
    fn unused_phrase() {
        let s = parse("phrase p { hold for 1 }\nphrase q { hold for 1 }\nplay p").unwrap();
        let d = lint(&s);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "unused phrase 'q'");
    }

    #[test]
    fn phrases_reached_through_use_are_played() {
        let s = parse("phrase p { use q }\nphrase q { hold for 1 }\nplay p").unwrap();
        assert!(lint(&s).is_empty());
    }

    #[test]
    fn empty_score_is_quiet() {
        assert!(lint(&parse("").unwrap()).is_empty());
    }

    #[test]
    fn empty_phrase() {
        let s = parse("phrase p {\n}\nplay p").unwrap();
        assert_eq!(lint(&s)[0].message, "empty phrase 'p'");
    }

    #[test]
    fn shared_quality_suggests_theme() {
        let text = "phrase p {\n  arm -> fwd_mid for 1 [time: sudden]\n  arm -> back_mid for 1 [time: sudden, weight: light]\n}\nplay p";
        let parsed = parse_with(text, &ParseOptions::default()).unwrap();
        let d = lint_mapped(&parsed.score, &parsed.source_map);
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("[time: sudden]"));
        assert!(d[0].message.contains("consider a theme"));
        assert_eq!(d[0].span.unwrap().line, 1);
    }

    /// Every phrase of up to three actions over {hold, move} x {no quality,
    /// sudden, sudden+light, light}: the warning fires exactly when brute
    /// force finds a quality held by all actions of a 2+ action all-move
    /// phrase.
    #[test]
    fn theme_hint_matches_enumeration() {
        use crate::score::{
            Beats, BodyLabel, EffortQuality, Move, Phrase, PlayExpr, Reach, Time, Weight,
        };
        let universe = [
            EffortQuality::Time(Time::Sudden),
            EffortQuality::Time(Time::Sustained),
            EffortQuality::Weight(Weight::Light),
        ];
        let choices: Vec<Option<Vec<EffortQuality>>> = vec![
            None,
            Some(vec![]),
            Some(vec![universe[0]]),
            Some(vec![universe[0], universe[2]]),
            Some(vec![universe[2]]),
            Some(vec![universe[1]]),
        ];
        let action = |c: &Option<Vec<EffortQuality>>| match c {
            None => Action::Hold {
                beats: Beats::whole(1).unwrap(),
            },
            Some(qs) => Action::Move(Move {
                label: BodyLabel::new("arm"),
                direction: "fwd_mid".parse().unwrap(),
                reach: Reach::Mid,
                beats: Beats::whole(1).unwrap(),
                qualities: qs.iter().copied().collect(),
            }),
        };
        let mut cases = 0;
        for len in 0..=3usize {
            let total = choices.len().pow(len as u32);
            for code in 0..total {
                let picks: Vec<&Option<Vec<EffortQuality>>> = (0..len)
                    .map(|i| &choices[(code / choices.len().pow(i as u32)) % choices.len()])
                    .collect();
                let oracle = len >= 2
                    && picks.iter().all(|p| p.is_some())
                    && universe.iter().any(|q| {
                        picks
                            .iter()
                            .all(|p| p.as_ref().is_some_and(|qs| qs.contains(q)))
                    });
                let mut s = Score::default();
                s.add_phrase(Phrase::new("p", picks.iter().map(|p| action(p)).collect()));
                s.playlist.push(PlayExpr::phrase("p"));
                let fired = lint(&s).iter().any(|d| d.message.contains("consider a theme"));
                assert_eq!(fired, oracle, "{picks:?}");
                cases += 1;
            }
        }
        assert_eq!(cases, 1 + 6 + 36 + 216);
    }
}
