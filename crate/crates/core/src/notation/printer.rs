use std::fmt::Write;

use crate::score::{transform::total_beats, Action, Phrase, PlayExpr, Qualities, Score, Theme};

/// Canonical text for a valid score. `parse(print(s))` reproduces `s`.
pub fn print(s: &Score) -> String {
    let mut blocks: Vec<String> = Vec::new();

    let mut header = format!("tempo {}\n", s.tempo);
    if let Some(path) = &s.platform {
        let _ = writeln!(header, "platform {}", quote(path));
    }
    blocks.push(header);

    for phrase in s.phrases.values() {
        blocks.push(print_phrase(phrase));
    }

    if !s.playlist.is_empty() {
        let mut plays = String::new();
        for expr in &s.playlist {
            let _ = writeln!(plays, "play {}", print_expr(expr));
        }
        blocks.push(plays);
    }

    blocks.join("\n")
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print_phrase(p: &Phrase) -> String {
    let mut out = format!("phrase {} {{\n", p.name);
    for action in &p.actions {
        let _ = writeln!(out, "  {}", print_action(action));
    }
    for theme in &p.themes {
        let _ = writeln!(out, "  {}", print_theme(theme));
    }
    out.push_str("}\n");
    out
}

pub fn print_action(a: &Action) -> String {
    match a {
        Action::Move(m) => {
            let mut s = format!("{} -> {} {} for {}", m.label, m.direction, m.reach, m.beats);
            if !m.qualities.is_empty() {
                s.push(' ');
                s.push_str(&print_qualities(&m.qualities));
            }
            s
        }
        Action::Hold { beats } => format!("hold for {beats}"),
        Action::PhraseRef { name } => format!("use {name}"),
    }
}

pub fn print_qualities(q: &Qualities) -> String {
    let inner: Vec<String> = q.iter().map(|q| q.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

fn print_theme(t: &Theme) -> String {
    let range = if t.len() == 1 {
        format!("{}", t.start + 1)
    } else {
        format!("{}..{}", t.start + 1, t.end)
    };
    format!("theme {} on {range}", print_qualities(&t.qualities))
}

pub fn print_expr(e: &PlayExpr) -> String {
    match e {
        PlayExpr::Phrase(n) => n.clone(),
        PlayExpr::Retrograde(e) => format!("retrograde({})", print_expr(e)),
        PlayExpr::Mirror(e, axis) => format!("mirror({}, {axis})", print_expr(e)),
        PlayExpr::Scale(e, k) => format!("scale({}, {k})", print_expr(e)),
        PlayExpr::Level(e, n) => format!("level({}, {n})", print_expr(e)),
        PlayExpr::Extent(e, n) => format!("extent({}, {n})", print_expr(e)),
        PlayExpr::Repeat(e, n) => format!("repeat({}, {n})", print_expr(e)),
        PlayExpr::Concat(a, b) => format!("concat({}, {})", print_expr(a), print_expr(b)),
    }
}

/// Column diagram of a phrase in graphic Motif order: the first action at the
/// bottom, time running upwards, one row per beat (rounded up).
pub fn motif_diagram(p: &Phrase) -> String {
    let width = p
        .actions
        .iter()
        .map(|a| print_action(a).chars().count())
        .max()
        .unwrap_or(0);
    let mut rows: Vec<String> = Vec::new();
    for action in &p.actions {
        let text = print_action(action);
        let beats = action.beats().map(|b| b.as_f64().ceil().max(1.0) as usize);
        let height = beats.unwrap_or(1);
        rows.push(format!("| {text:<width$} |"));
        for _ in 1..height {
            rows.push(format!("| {:<width$} |", ""));
        }
        rows.push(format!("+{}+", "-".repeat(width + 2)));
    }
    rows.reverse();
    let mut out = format!("{} ({} beats)\n", p.name, total_beats(p).map_or("0".into(), |b| b.to_string()));
    out.push_str(&format!("+{}+\n", "-".repeat(width + 2)));
    for row in rows.iter().skip(1) {
        out.push_str(row);
        out.push('\n');
    }
    out.push_str(&format!("+{}+\n", "=".repeat(width + 2)));
    out
}
