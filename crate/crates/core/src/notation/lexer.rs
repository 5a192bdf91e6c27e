use crate::diag::{Diagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(String),
    Decimal(String),
    Str(String),
    Arrow,
    Minus,
    DotDot,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Slash,
    Semi,
    Newline,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(s) | Tok::Decimal(s) => format!("number '{s}'"),
            Tok::Str(_) => "string".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Minus => "'-'".into(),
            Tok::DotDot => "'..'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Colon => "':'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Semi => "';'".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line = self.line.saturating_add(1);
            self.col = 1;
        } else {
            self.col = self.col.saturating_add(1);
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` into tokens. Lexical errors are reported and the offending
/// character skipped, so the token stream always ends with `Eof`.
pub(crate) fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while let Some(c) = cur.peek() {
        let (line, col) = (cur.line, cur.col);
        let span = |len: u32| SourceSpan::new(line, col, len);
        match c {
            '\n' => {
                cur.bump();
                tokens.push(Token {
                    tok: Tok::Newline,
                    span: span(1),
                });
            }
            c if c.is_whitespace() => {
                cur.bump();
            }
            '#' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(c) = cur.peek().filter(|c| is_ident_char(*c)) {
                    s.push(c);
                    cur.bump();
                }
                let len = s.chars().count() as u32;
                tokens.push(Token {
                    tok: Tok::Ident(s),
                    span: span(len),
                });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                    s.push(c);
                    cur.bump();
                }
                let mut tok = None;
                if cur.peek() == Some('.') {
                    // `1..3` is a range, `1.5` a decimal.
                    let mut look = cur.chars.clone();
                    look.next();
                    if look.peek().is_some_and(char::is_ascii_digit) {
                        s.push('.');
                        cur.bump();
                        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                            s.push(c);
                            cur.bump();
                        }
                        tok = Some(Tok::Decimal(s.clone()));
                    }
                }
                let len = s.chars().count() as u32;
                tokens.push(Token {
                    tok: tok.unwrap_or(Tok::Int(s)),
                    span: span(len),
                });
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                let mut len = 1u32;
                let mut closed = false;
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                    len = len.saturating_add(1);
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match cur.peek() {
                            Some(e @ ('"' | '\\')) => {
                                cur.bump();
                                len = len.saturating_add(1);
                                s.push(e);
                            }
                            Some('n') => {
                                cur.bump();
                                len = len.saturating_add(1);
                                s.push('\n');
                            }
                            _ => {
                                diags.push(
                                    Diagnostic::error("unknown escape in string")
                                        .at(SourceSpan::new(cur.line, cur.col.saturating_sub(1), 1)),
                                );
                            }
                        },
                        other => s.push(other),
                    }
                }
                if !closed {
                    diags.push(Diagnostic::error("unterminated string").at(span(len)));
                }
                tokens.push(Token {
                    tok: Tok::Str(s),
                    span: span(len),
                });
            }
            _ => {
                cur.bump();
                let two = |cur: &mut Cursor, next: char| {
                    if cur.peek() == Some(next) {
                        cur.bump();
                        true
                    } else {
                        false
                    }
                };
                let tok = match c {
                    '-' if two(&mut cur, '>') => Some((Tok::Arrow, 2)),
                    '-' => Some((Tok::Minus, 1)),
                    '.' if two(&mut cur, '.') => Some((Tok::DotDot, 2)),
                    '{' => Some((Tok::LBrace, 1)),
                    '}' => Some((Tok::RBrace, 1)),
                    '[' => Some((Tok::LBracket, 1)),
                    ']' => Some((Tok::RBracket, 1)),
                    '(' => Some((Tok::LParen, 1)),
                    ')' => Some((Tok::RParen, 1)),
                    ',' => Some((Tok::Comma, 1)),
                    ':' => Some((Tok::Colon, 1)),
                    '/' => Some((Tok::Slash, 1)),
                    ';' => Some((Tok::Semi, 1)),
                    _ => None,
                };
                match tok {
                    Some((tok, len)) => tokens.push(Token {
                        tok,
                        span: span(len),
                    }),
                    None => diags.push(
                        Diagnostic::error(format!("unexpected character {c:?}")).at(span(1)),
                    ),
                }
            }
        }
    }
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(cur.line, cur.col, 1),
    });
    (tokens, diags)
}
