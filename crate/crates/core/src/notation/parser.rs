//! Recursive-descent parser for `.mvt` scores.
//!
//! Statements are line oriented. On a syntax error the parser reports it,
//! skips to the next statement boundary (end of line, `;`, or the closing `}`
//! of the current phrase) and carries on, so one typo never hides the
//! diagnostics that follow it.

use std::collections::BTreeSet;

use super::lexer::{lex, Tok, Token};
use crate::diag::{Diagnostic, SourceSpan};
use crate::score::{
    validate_score_mapped, Action, Axis, Beats, BodyLabel, Direction, EffortFactor, EffortQuality,
    Move, Phrase, PhraseSpans, PlayExpr, Qualities, Reach, Score, SourceMap, Theme,
};

/// Words that cannot name a phrase or a body label.
pub const RESERVED: [&str; 9] = [
    "tempo", "platform", "phrase", "play", "hold", "use", "theme", "for", "on",
];

const TRANSFORMS: [&str; 7] = [
    "retrograde",
    "mirror",
    "scale",
    "level",
    "extent",
    "repeat",
    "concat",
];

/// Options that tighten what the parser accepts.
#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// When set, move labels outside this set are errors.
    pub labels: Option<BTreeSet<String>>,
}

/// A successfully parsed score together with its source locations.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub score: Score,
    pub source_map: SourceMap,
}

/// Parses score text. On failure every error found in the pass is returned.
pub fn parse(text: &str) -> Result<Score, Vec<Diagnostic>> {
    parse_with(text, &ParseOptions::default()).map(|p| p.score)
}

pub fn parse_with(text: &str, options: &ParseOptions) -> Result<Parsed, Vec<Diagnostic>> {
    let (tokens, mut diags) = lex(text);
    let mut parser = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
        score: Score::default(),
        map: SourceMap::default(),
        options,
        saw_tempo: false,
        saw_platform: false,
    };
    parser.score_body();
    diags.append(&mut parser.diags);
    let Parser { score, map, .. } = parser;
    if diags.iter().any(Diagnostic::is_error) {
        diags.sort_by_key(|d| d.span);
        return Err(diags);
    }
    let mut semantic = validate_score_mapped(&score, &map);
    if semantic.iter().any(Diagnostic::is_error) {
        semantic.sort_by_key(|d| d.span);
        return Err(semantic);
    }
    Ok(Parsed {
        score,
        source_map: map,
    })
}

/// Marker for "a diagnostic was already emitted; recover".
struct Bail;

type PResult<T> = Result<T, Bail>;

struct Parser<'o> {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
    score: Score,
    map: SourceMap,
    options: &'o ParseOptions,
    saw_tempo: bool,
    saw_platform: bool,
}

fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    if a.line == b.line && b.column >= a.column {
        SourceSpan::new(a.line, a.column, b.column - a.column + b.length)
    } else {
        a
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn error(&mut self, message: impl Into<String>, span: SourceSpan) -> Bail {
        self.diags.push(Diagnostic::error(message).at(span));
        Bail
    }

    fn expected(&mut self, what: &str) -> Bail {
        let found = self.peek().describe();
        let span = self.span();
        self.error(format!("expected {what}, found {found}"), span)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.advance().span)
        } else {
            Err(self.expected(what))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.advance().span;
                Ok((s, span))
            }
            _ => Err(self.expected(what)),
        }
    }

    fn name(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        let (s, span) = self.ident(what)?;
        if RESERVED.contains(&s.as_str()) {
            return Err(self.error(format!("'{s}' is a reserved word and cannot be {what}"), span));
        }
        Ok((s, span))
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Semi) {
            self.advance();
        }
    }

    /// Skips to the end of the current top-level statement, stepping over
    /// any brace-delimited block on the way.
    fn recover_statement(&mut self) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Newline | Tok::Semi if depth == 0 => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => {
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.advance();
                        return;
                    }
                }
                _ => {}
            }
            self.advance();
        }
    }

    /// Skips to the end of the current item inside a phrase body, leaving a
    /// closing `}` in place.
    fn recover_item(&mut self) {
        while !matches!(self.peek(), Tok::Eof | Tok::Newline | Tok::Semi | Tok::RBrace) {
            self.advance();
        }
    }

    fn end_of_statement(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline | Tok::Semi | Tok::Eof => Ok(()),
            _ => Err(self.expected("end of line")),
        }
    }

    fn score_body(&mut self) {
        loop {
            self.skip_separators();
            if *self.peek() == Tok::Eof {
                break;
            }
            let result = match self.peek().clone() {
                Tok::Ident(kw) if kw == "tempo" => self.tempo(),
                Tok::Ident(kw) if kw == "platform" => self.platform(),
                Tok::Ident(kw) if kw == "phrase" => self.phrase(),
                Tok::Ident(kw) if kw == "play" => self.play(),
                _ => Err(self.expected("'tempo', 'platform', 'phrase' or 'play'")),
            }
            .and_then(|()| self.end_of_statement());
            if result.is_err() {
                self.recover_statement();
            }
        }
    }

    fn tempo(&mut self) -> PResult<()> {
        let kw = self.advance().span;
        let (text, span) = match self.peek().clone() {
            Tok::Int(s) | Tok::Decimal(s) => (s, self.advance().span),
            _ => return Err(self.expected("beats per minute after 'tempo'")),
        };
        let bpm: f64 = text.parse().unwrap_or(f64::NAN);
        if !(bpm.is_finite() && bpm > 0.0) {
            return Err(self.error("tempo must be a positive number", span));
        }
        if self.saw_tempo {
            return Err(self.error("tempo is already set", kw));
        }
        self.saw_tempo = true;
        self.score.tempo = bpm;
        self.map.tempo = Some(join(kw, span));
        Ok(())
    }

    fn platform(&mut self) -> PResult<()> {
        let kw = self.advance().span;
        let path = match self.peek().clone() {
            Tok::Str(s) => {
                self.advance();
                s
            }
            _ => return Err(self.expected("a quoted path after 'platform'")),
        };
        if self.saw_platform {
            return Err(self.error("platform is already set", kw));
        }
        self.saw_platform = true;
        self.score.platform = Some(path);
        Ok(())
    }

    fn phrase(&mut self) -> PResult<()> {
        self.advance();
        let (name, name_span) = self.name("a phrase name")?;
        let open = self.expect(Tok::LBrace, "'{'")?;
        let mut phrase = Phrase::new(name.clone(), Vec::new());
        let mut spans = PhraseSpans {
            name: Some(name_span),
            ..PhraseSpans::default()
        };
        loop {
            self.skip_separators();
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Eof => {
                    self.diags.push(
                        Diagnostic::error(format!("phrase '{name}' is missing its closing '}}'"))
                            .at(open),
                    );
                    break;
                }
                _ => {}
            }
            let start = self.span();
            let item = self.item(&mut phrase).and_then(|()| match self.peek() {
                Tok::Newline | Tok::Semi | Tok::RBrace => Ok(()),
                _ => Err(self.expected("end of line")),
            });
            match item {
                Ok(()) => {
                    let span = join(start, self.prev_span());
                    if phrase.themes.len() > spans.themes.len() {
                        spans.themes.push(span);
                    } else {
                        spans.actions.push(span);
                    }
                }
                Err(Bail) => {
                    // Keep action and span lists aligned after a partial item.
                    phrase.actions.truncate(spans.actions.len());
                    phrase.themes.truncate(spans.themes.len());
                    self.recover_item();
                }
            }
        }
        if self.score.phrases.contains_key(&name) {
            return Err(self.error(format!("duplicate phrase name '{name}'"), name_span));
        }
        self.score.add_phrase(phrase);
        self.map.phrases.insert(name, spans);
        Ok(())
    }

    fn item(&mut self, phrase: &mut Phrase) -> PResult<()> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "hold" => {
                self.advance();
                let beats = self.for_beats()?;
                phrase.actions.push(Action::Hold { beats });
            }
            Tok::Ident(kw) if kw == "use" => {
                self.advance();
                let (name, _) = self.name("a phrase name")?;
                phrase.actions.push(Action::PhraseRef { name });
            }
            Tok::Ident(kw) if kw == "theme" => {
                let kw_span = self.advance().span;
                let qualities = self.qualities()?;
                if !self.at_keyword("on") {
                    return Err(self.expected("'on <action range>'"));
                }
                self.advance();
                let (first, first_span) = self.index()?;
                let last = if *self.peek() == Tok::DotDot {
                    self.advance();
                    self.index()?.0
                } else {
                    first
                };
                if first == 0 || last < first {
                    let span = join(first_span, self.prev_span());
                    return Err(self.error(
                        "theme range must be 1-based and ascending, e.g. 'on 1..3'",
                        span,
                    ));
                }
                if qualities.is_empty() {
                    return Err(self.error("theme carries no quality", kw_span));
                }
                phrase.themes.push(Theme {
                    qualities,
                    start: first - 1,
                    end: last,
                });
            }
            Tok::Ident(_) => {
                let mv = self.movement()?;
                phrase.actions.push(Action::Move(mv));
            }
            _ => return Err(self.expected("an action, 'hold', 'use' or 'theme'")),
        }
        Ok(())
    }

    fn movement(&mut self) -> PResult<Move> {
        let (label, label_span) = self.name("a body label")?;
        if let Some(known) = &self.options.labels {
            if !known.contains(&label) {
                let list = known.iter().cloned().collect::<Vec<_>>().join(", ");
                return Err(self.error(
                    format!("unknown body label '{label}' (platform defines: {list})"),
                    label_span,
                ));
            }
        }
        self.expect(Tok::Arrow, "'->' after the body label")?;
        let (dir_word, dir_span) = self.ident("a direction such as 'fwd_high'")?;
        let direction: Direction = dir_word
            .parse()
            .map_err(|msg: String| self.error(msg, dir_span))?;
        let mut reach = Reach::Mid;
        if let Tok::Ident(word) = self.peek() {
            if let Some(r) = Reach::from_keyword(word) {
                reach = r;
                self.advance();
            }
        }
        let beats = self.for_beats()?;
        let qualities = if *self.peek() == Tok::LBracket {
            self.qualities()?
        } else {
            Qualities::default()
        };
        Ok(Move {
            label: BodyLabel(label),
            direction,
            reach,
            beats,
            qualities,
        })
    }

    fn for_beats(&mut self) -> PResult<Beats> {
        if !self.at_keyword("for") {
            let span = self.span();
            return Err(self.error("expected 'for <beats>'", span));
        }
        self.advance();
        self.beats()
    }

    fn beats(&mut self) -> PResult<Beats> {
        let start = self.span();
        let numer = match self.peek().clone() {
            Tok::Int(s) => {
                self.advance();
                self.int_value(&s, start)?
            }
            Tok::Decimal(s) => {
                self.advance();
                return Err(self.error(
                    format!("decimal durations are not allowed; write '{s}' as a fraction such as 3/2"),
                    start,
                ));
            }
            _ => return Err(self.expected("a beat count such as 2 or 3/2")),
        };
        let denom = if *self.peek() == Tok::Slash {
            self.advance();
            let span = self.span();
            match self.peek().clone() {
                Tok::Int(s) => {
                    self.advance();
                    self.int_value(&s, span)?
                }
                _ => return Err(self.expected("a denominator")),
            }
        } else {
            1
        };
        let span = join(start, self.prev_span());
        if denom == 0 {
            return Err(self.error("denominator must not be zero", span));
        }
        Beats::new(numer, denom).ok_or_else(|| self.error("duration must be positive", span))
    }

    fn int_value(&mut self, digits: &str, span: SourceSpan) -> PResult<i64> {
        digits
            .parse::<i64>()
            .map_err(|_| self.error(format!("number '{digits}' is too large"), span))
    }

    fn index(&mut self) -> PResult<(usize, SourceSpan)> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(s) => {
                self.advance();
                let n = s
                    .parse::<usize>()
                    .map_err(|_| self.error(format!("number '{s}' is too large"), span))?;
                Ok((n, span))
            }
            _ => Err(self.expected("an action number")),
        }
    }

    fn signed(&mut self) -> PResult<i32> {
        let negative = if *self.peek() == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(s) => {
                self.advance();
                let n = s
                    .parse::<i32>()
                    .map_err(|_| self.error(format!("number '{s}' is too large"), span))?;
                Ok(if negative { -n } else { n })
            }
            _ => Err(self.expected("an integer")),
        }
    }

    fn qualities(&mut self) -> PResult<Qualities> {
        self.expect(Tok::LBracket, "'['")?;
        let mut q = Qualities::default();
        loop {
            let (factor_word, factor_span) = self.ident("a quality such as 'time: sudden'")?;
            let factor = EffortFactor::from_keyword(&factor_word).ok_or_else(|| {
                self.error(
                    format!("unknown quality '{factor_word}' (expected weight, time, space or flow)"),
                    factor_span,
                )
            })?;
            self.expect(Tok::Colon, "':' after the quality name")?;
            let (pole_word, pole_span) = self.ident("a quality pole")?;
            let quality = EffortQuality::from_keywords(factor, &pole_word).ok_or_else(|| {
                let [a, b] = factor.poles();
                self.error(
                    format!(
                        "unknown {} pole '{pole_word}' (expected {a} or {b})",
                        factor.keyword()
                    ),
                    pole_span,
                )
            })?;
            if q.insert(quality).is_some() {
                let span = join(factor_span, pole_span);
                return Err(self.error(
                    format!("duplicate {} quality; an action takes one pole per factor", factor.keyword()),
                    span,
                ));
            }
            match self.peek() {
                Tok::Comma => {
                    self.advance();
                }
                Tok::RBracket => {
                    self.advance();
                    return Ok(q);
                }
                _ => return Err(self.expected("',' or ']'")),
            }
        }
    }

    fn play(&mut self) -> PResult<()> {
        let kw = self.advance().span;
        let expr = self.expr(0)?;
        let span = join(kw, self.prev_span());
        self.score.playlist.push(expr);
        self.map.playlist.push(span);
        Ok(())
    }

    fn expr(&mut self, depth: usize) -> PResult<PlayExpr> {
        if depth > 64 {
            let span = self.span();
            return Err(self.error("expression nested too deeply", span));
        }
        let (word, span) = self.ident("a phrase name or transform")?;
        if *self.peek() != Tok::LParen {
            if RESERVED.contains(&word.as_str()) {
                return Err(self.error(format!("'{word}' is a reserved word"), span));
            }
            return Ok(PlayExpr::Phrase(word));
        }
        if !TRANSFORMS.contains(&word.as_str()) {
            return Err(self.error(
                format!(
                    "unknown transform '{word}' (expected one of {})",
                    TRANSFORMS.join(", ")
                ),
                span,
            ));
        }
        self.advance();
        let inner = Box::new(self.expr(depth + 1)?);
        let arg_start = self.span();
        let expr = match word.as_str() {
            "retrograde" => PlayExpr::Retrograde(inner),
            "mirror" => {
                self.expect(Tok::Comma, "',' and an axis")?;
                let (axis, axis_span) = self.ident("an axis (x, y or z)")?;
                let axis: Axis = axis.parse().map_err(|m: String| self.error(m, axis_span))?;
                PlayExpr::Mirror(inner, axis)
            }
            "scale" => {
                self.expect(Tok::Comma, "',' and a factor")?;
                PlayExpr::Scale(inner, self.beats()?)
            }
            "level" => {
                self.expect(Tok::Comma, "',' and a step count")?;
                PlayExpr::Level(inner, self.signed()?)
            }
            "extent" => {
                self.expect(Tok::Comma, "',' and a step count")?;
                PlayExpr::Extent(inner, self.signed()?)
            }
            "repeat" => {
                self.expect(Tok::Comma, "',' and a count")?;
                let n = self.signed()?;
                if n < 1 {
                    let span = join(arg_start, self.prev_span());
                    return Err(self.error("repeat count must be at least 1", span));
                }
                PlayExpr::Repeat(inner, n as u32)
            }
            "concat" => {
                self.expect(Tok::Comma, "',' and a second expression")?;
                PlayExpr::Concat(inner, Box::new(self.expr(depth + 1)?))
            }
            _ => unreachable!(),
        };
        self.expect(Tok::RParen, "')'")?;
        Ok(expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(text: &str) -> Vec<Diagnostic> {
        parse(text).expect_err("expected parse failure")
    }

    #[test]
    fn minimal_program() {
        let s = parse("phrase p { right_hand -> fwd_high far for 2 }\nplay p").unwrap();
        assert_eq!(s.phrases.len(), 1);
        let p = &s.phrases["p"];
        assert_eq!(p.actions.len(), 1);
        let Action::Move(m) = &p.actions[0] else {
            panic!("expected a move")
        };
        assert_eq!(m.label.as_str(), "right_hand");
        assert_eq!(m.direction.to_string(), "fwd_high");
        assert_eq!(m.reach, Reach::Far);
        assert_eq!(m.beats, Beats::whole(2).unwrap());
        assert_eq!(s.playlist, vec![PlayExpr::phrase("p")]);
    }

    #[test]
    fn missing_duration_points_at_the_gap() {
        let d = errors("phrase p {\n  right_hand -> fwd_mid\n}\nplay p");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "expected 'for <beats>'");
        let span = d[0].span.unwrap();
        assert_eq!((span.line, span.column), (2, 24));
    }

    #[test]
    fn transform_call_in_playlist() {
        let s = parse("phrase p { arm -> fwd_mid for 1 }\nplay retrograde(p)").unwrap();
        assert_eq!(
            s.playlist,
            vec![PlayExpr::Retrograde(Box::new(PlayExpr::phrase("p")))]
        );
        let s = parse(
            "phrase p { arm -> fwd_mid for 1 }\nplay concat(repeat(mirror(p, x), 2), scale(level(extent(p, -1), 1), 3/2))",
        )
        .unwrap();
        assert_eq!(s.playlist.len(), 1);
    }

    #[test]
    fn recovers_and_reports_every_error() {
        let text = "tempo 120\nphrase p {\n  arm -> sideways_high for 1\n  arm -> fwd_mid for 0\n  arm -> fwd_mid for 1.5\n  arm -> fwd_mid for 1 [time: slow]\n}\nphrase p { hold for 1 }\nplay q\n";
        let d = errors(text);
        let messages: Vec<&str> = d.iter().map(|d| d.message.as_str()).collect();
        assert!(messages[0].contains("unknown direction"), "{messages:?}");
        assert!(messages[1].contains("positive"), "{messages:?}");
        assert!(messages[2].contains("decimal"), "{messages:?}");
        assert!(messages[3].contains("unknown time pole"), "{messages:?}");
        assert!(messages[4].contains("duplicate phrase name"), "{messages:?}");
        assert_eq!(d.len(), 5, "{messages:?}");
        let lines: Vec<u32> = d.iter().map(|d| d.span.unwrap().line).collect();
        assert_eq!(lines, vec![3, 4, 5, 6, 8]);
    }

    #[test]
    fn semantic_errors_carry_spans() {
        let d = errors("phrase a { use b }\nphrase b { use a }\nplay a\nplay ghost");
        let messages: Vec<&str> = d.iter().map(|d| d.message.as_str()).collect();
        assert_eq!(d.len(), 2, "{messages:?}");
        assert!(messages.iter().any(|m| m.starts_with("recursive phrase")));
        let ghost = d.iter().find(|d| d.message.contains("ghost")).unwrap();
        assert_eq!(ghost.span.unwrap().line, 4);
    }

    #[test]
    fn qualities_and_themes() {
        let s = parse(
            "phrase p {\n  arm -> fwd_mid for 1 [time: sudden, weight: light]\n  hold for 1/2\n  theme [flow: bound] on 1..2\n}\nplay p",
        )
        .unwrap();
        let p = &s.phrases["p"];
        assert_eq!(p.themes.len(), 1);
        assert_eq!((p.themes[0].start, p.themes[0].end), (0, 2));
        let d = errors("phrase p { arm -> fwd_mid for 1 [time: sudden, time: sustained] }");
        assert!(d[0].message.contains("duplicate time quality"));
        let d = errors("phrase p {\n  hold for 1\n  theme [flow: free] on 1..4\n}\nplay p");
        assert!(d[0].message.contains("outside phrase"), "{d:?}");
        assert_eq!(d[0].span.unwrap().line, 3);
    }

    #[test]
    fn label_checking_is_opt_in() {
        let text = "phrase p { wing -> fwd_mid for 1 }\nplay p";
        assert!(parse(text).is_ok());
        let options = ParseOptions {
            labels: Some(["arm".to_string()].into_iter().collect()),
        };
        let d = parse_with(text, &options).unwrap_err();
        assert!(d[0].message.contains("unknown body label 'wing'"));
    }

    #[test]
    fn headers() {
        let s = parse("tempo 90.5\nplatform \"arm3.eurdf.json\"\n").unwrap();
        assert_eq!(s.tempo, 90.5);
        assert_eq!(s.platform.as_deref(), Some("arm3.eurdf.json"));
        assert!(parse("tempo 0").is_err());
        assert!(parse("tempo 60\ntempo 70").is_err());
    }

    #[test]
    fn unclosed_phrase() {
        let d = errors("phrase p {\n  hold for 1\n");
        assert!(d[0].message.contains("closing"));
    }

    #[test]
    fn error_spans_stay_in_bounds() {
        for text in ["phrase", "play", "phrase p {", "tempo", "x -> ", "phrase p { a -> b", "\"abc"] {
            let lines: Vec<&str> = text.split('\n').collect();
            for d in errors(text) {
                let span = d.span.unwrap();
                assert!(span.line as usize <= lines.len(), "{text:?}: {d:?}");
                let width = lines[span.line as usize - 1].chars().count() as u32 + 1;
                assert!(span.column <= width, "{text:?}: {d:?}");
            }
        }
    }
}
