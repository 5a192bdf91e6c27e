//! The `.mvt` score language.
//!
//! ```text
//! score     = { statement ( NEWLINE | ";" ) } ;
//! statement = "tempo" number
//!           | "platform" string
//!           | "phrase" name "{" { item ( NEWLINE | ";" ) } "}"
//!           | "play" expr ;
//! item      = label "->" direction [ reach ] "for" beats [ qualities ]
//!           | "hold" "for" beats
//!           | "use" name
//!           | "theme" qualities "on" int [ ".." int ] ;
//! direction = horizontal "_" ( "high" | "mid" | "low" ) ;
//! reach     = "near" | "mid" | "far" ;
//! beats     = int [ "/" int ] ;
//! qualities = "[" factor ":" pole { "," factor ":" pole } "]" ;
//! expr      = name
//!           | "retrograde" "(" expr ")"
//!           | "mirror" "(" expr "," ( "x" | "y" | "z" ) ")"
//!           | "scale" "(" expr "," beats ")"
//!           | ( "level" | "extent" ) "(" expr "," [ "-" ] int ")"
//!           | "repeat" "(" expr "," int ")"
//!           | "concat" "(" expr "," expr ")" ;
//! ```
//!
//! `#` starts a comment running to the end of the line.

mod lexer;
mod lint;
mod parser;
mod printer;

pub use lint::{lint, lint_mapped};
pub use parser::{parse, parse_with, ParseOptions, Parsed, RESERVED};
pub use printer::{motif_diagram, print, print_action, print_expr, print_phrase, print_qualities};
