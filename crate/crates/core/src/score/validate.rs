use std::collections::HashMap;

use super::{Action, PlayExpr, Score, SourceMap};
use crate::diag::Diagnostic;

/// Checks every score invariant. An empty result means the score is valid.
pub fn validate_score(s: &Score) -> Vec<Diagnostic> {
    check(s, None)
}

/// Same as [`validate_score`], attaching source spans from `map`.
pub fn validate_score_mapped(s: &Score, map: &SourceMap) -> Vec<Diagnostic> {
    check(s, Some(map))
}

fn check(s: &Score, map: Option<&SourceMap>) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if !(s.tempo.is_finite() && s.tempo > 0.0) {
        out.push(
            Diagnostic::error(format!("tempo must be positive and finite, got {}", s.tempo))
                .with_span(map.and_then(|m| m.tempo)),
        );
    }

    for (key, phrase) in &s.phrases {
        if key != &phrase.name {
            out.push(
                Diagnostic::error(format!(
                    "phrase stored as '{key}' is named '{}'",
                    phrase.name
                ))
                .with_span(map.and_then(|m| m.phrase(key))),
            );
        }
        for (i, action) in phrase.actions.iter().enumerate() {
            if let Action::PhraseRef { name } = action {
                if !s.phrases.contains_key(name) {
                    out.push(
                        Diagnostic::error(format!("unresolved phrase '{name}'"))
                            .with_span(map.and_then(|m| m.action(key, i))),
                    );
                }
            }
        }
        for (i, theme) in phrase.themes.iter().enumerate() {
            let span = map.and_then(|m| m.theme(key, i));
            if theme.is_empty() || theme.end > phrase.actions.len() {
                out.push(
                    Diagnostic::error(format!(
                        "theme range {}..{} lies outside phrase '{}' ({} actions)",
                        theme.start + 1,
                        theme.end,
                        phrase.name,
                        phrase.actions.len()
                    ))
                    .with_span(span),
                );
            }
            if theme.qualities.is_empty() {
                out.push(Diagnostic::error("theme carries no quality").with_span(span));
            }
        }
    }

    for cycle in phrase_cycles(s) {
        let first = cycle[0].clone();
        let mut path = cycle.join(" -> ");
        path.push_str(" -> ");
        path.push_str(&first);
        out.push(
            Diagnostic::error(format!("recursive phrase: {path}"))
                .with_span(map.and_then(|m| m.phrase(&first))),
        );
    }

    for (i, expr) in s.playlist.iter().enumerate() {
        let span = map.and_then(|m| m.play(i));
        for name in expr.phrase_names() {
            if !s.phrases.contains_key(name) {
                out.push(Diagnostic::error(format!("unresolved phrase '{name}'")).with_span(span));
            }
        }
        check_expr(expr, &mut |msg| {
            out.push(Diagnostic::error(msg).with_span(span));
        });
    }

    out
}

fn check_expr(expr: &PlayExpr, report: &mut impl FnMut(String)) {
    match expr {
        PlayExpr::Phrase(_) => {}
        PlayExpr::Repeat(e, n) => {
            if *n == 0 {
                report("repeat count must be at least 1".to_string());
            }
            check_expr(e, report);
        }
        PlayExpr::Retrograde(e)
        | PlayExpr::Mirror(e, _)
        | PlayExpr::Scale(e, _)
        | PlayExpr::Level(e, _)
        | PlayExpr::Extent(e, _) => check_expr(e, report),
        PlayExpr::Concat(a, b) => {
            check_expr(a, report);
            check_expr(b, report);
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Open,
    Done,
}

/// Cycles in the phrase reference graph, one per back edge found by a
/// depth-first walk in definition order.
pub(crate) fn phrase_cycles(s: &Score) -> Vec<Vec<String>> {
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    let mut cycles = Vec::new();

    for root in s.phrases.keys() {
        if marks.contains_key(root.as_str()) {
            continue;
        }
        // Iterative DFS: (phrase, next action index to inspect).
        let mut stack: Vec<(&str, usize)> = vec![(root.as_str(), 0)];
        marks.insert(root.as_str(), Mark::Open);
        while let Some(&(name, idx)) = stack.last() {
            let phrase = &s.phrases[name];
            let next = phrase.actions[idx..]
                .iter()
                .position(|a| matches!(a, Action::PhraseRef { .. }));
            let Some(offset) = next else {
                marks.insert(name, Mark::Done);
                stack.pop();
                continue;
            };
            let at = idx + offset;
            if let Some(top) = stack.last_mut() {
                top.1 = at + 1;
            }
            let Action::PhraseRef { name: target } = &phrase.actions[at] else {
                unreachable!()
            };
            let Some((target, _)) = s.phrases.get_key_value(target) else {
                continue;
            };
            match marks.get(target.as_str()) {
                None => {
                    marks.insert(target.as_str(), Mark::Open);
                    stack.push((target.as_str(), 0));
                }
                Some(Mark::Open) => {
                    let from = stack
                        .iter()
                        .position(|(n, _)| *n == target.as_str())
                        .unwrap_or(0);
                    cycles.push(stack[from..].iter().map(|(n, _)| n.to_string()).collect());
                }
                Some(Mark::Done) => {}
            }
        }
    }
    cycles
}
