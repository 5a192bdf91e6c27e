//! Whole-score transforms, as applied by `choreo transform` and by the live
//! session's `apply_transform` control.

use std::fmt;
use std::str::FromStr;

use super::transform::{
    extent_shift, level_shift, mirror, retrograde, scale_durations, Axis, TransformError,
};
use super::{Beats, Phrase, PlayExpr, Score};
use crate::diag::Diagnostic;

/// One transform applied to the whole score. Written as the transform name
/// followed by its argument, e.g. `retrograde`, `mirror x`, `scale 3/2`,
/// `level -1`, `extent 1`, `repeat 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreOp {
    Retrograde,
    Mirror(Axis),
    Scale(Beats),
    Level(i32),
    Extent(i32),
    Repeat(u32),
}

pub const SCORE_OPS: [&str; 6] = ["retrograde", "mirror", "scale", "level", "extent", "repeat"];

impl ScoreOp {
    /// Builds an op from its name and argument words.
    pub fn from_parts(op: &str, args: &[&str]) -> Result<Self, String> {
        let one = || match args {
            [a] => Ok(*a),
            [] => Err(format!("'{op}' needs an argument")),
            _ => Err(format!("'{op}' takes one argument")),
        };
        let int = |a: &str| {
            a.parse::<i32>()
                .map_err(|_| format!("'{op}' expects an integer, got '{a}'"))
        };
        match op {
            "retrograde" if args.is_empty() => Ok(ScoreOp::Retrograde),
            "retrograde" => Err("'retrograde' takes no argument".into()),
            "mirror" => match args {
                [] => Ok(ScoreOp::Mirror(Axis::X)),
                _ => Ok(ScoreOp::Mirror(one()?.parse()?)),
            },
            "scale" => {
                let a = one()?;
                let k = a
                    .parse::<Beats>()
                    .ok()
                    .or_else(|| a.parse::<f64>().ok().and_then(Beats::from_f64))
                    .ok_or_else(|| format!("'scale' expects a positive factor, got '{a}'"))?;
                Ok(ScoreOp::Scale(k))
            }
            "level" => Ok(ScoreOp::Level(int(one()?)?)),
            "extent" => Ok(ScoreOp::Extent(int(one()?)?)),
            "repeat" => {
                let n = int(one()?)?;
                if n < 1 {
                    return Err("'repeat' count must be at least 1".into());
                }
                Ok(ScoreOp::Repeat(n as u32))
            }
            other => Err(format!(
                "unknown transform '{other}' (expected one of {})",
                SCORE_OPS.join(", ")
            )),
        }
    }

    /// Returns the transformed score and any clamping warnings.
    ///
    /// Per-action transforms rewrite every phrase body once, so phrases
    /// reached through `use` are transformed exactly once. Retrograde also
    /// reverses the playlist, which reverses the whole flattened trace and
    /// makes it an involution on the printed text. Repeat tiles the playlist.
    pub fn apply(&self, s: &Score) -> Result<(Score, Vec<Diagnostic>), TransformError> {
        let mut out = s.clone();
        let mut warnings = Vec::new();
        let mut each = |f: &mut dyn FnMut(&Phrase) -> Result<Phrase, TransformError>| {
            for p in out.phrases.values_mut() {
                *p = f(p)?;
            }
            Ok::<(), TransformError>(())
        };
        match *self {
            ScoreOp::Retrograde => {
                each(&mut |p| Ok(retrograde(p)))?;
                out.playlist = out.playlist.iter().rev().map(reverse_expr).collect();
            }
            ScoreOp::Mirror(axis) => each(&mut |p| Ok(mirror(p, axis)))?,
            ScoreOp::Scale(k) => each(&mut |p| scale_durations(p, k))?,
            ScoreOp::Level(n) => each(&mut |p| {
                let (p, d) = level_shift(p, n);
                warnings.extend(d);
                Ok(p)
            })?,
            ScoreOp::Extent(n) => each(&mut |p| {
                let (p, d) = extent_shift(p, n);
                warnings.extend(d);
                Ok(p)
            })?,
            ScoreOp::Repeat(n) => {
                if n == 0 {
                    return Err(TransformError::ZeroRepeat);
                }
                out.playlist = std::iter::repeat_n(s.playlist.iter().cloned(), n as usize)
                    .flatten()
                    .collect();
            }
        }
        Ok((out, warnings))
    }
}

/// Expression whose trace is the reverse of `e`'s once every phrase body has
/// been reversed.
fn reverse_expr(e: &PlayExpr) -> PlayExpr {
    let r = |e: &PlayExpr| Box::new(reverse_expr(e));
    match e {
        PlayExpr::Phrase(n) => PlayExpr::Phrase(n.clone()),
        PlayExpr::Retrograde(e) => PlayExpr::Retrograde(r(e)),
        PlayExpr::Mirror(e, a) => PlayExpr::Mirror(r(e), *a),
        PlayExpr::Scale(e, k) => PlayExpr::Scale(r(e), *k),
        PlayExpr::Level(e, n) => PlayExpr::Level(r(e), *n),
        PlayExpr::Extent(e, n) => PlayExpr::Extent(r(e), *n),
        PlayExpr::Repeat(e, n) => PlayExpr::Repeat(r(e), *n),
        PlayExpr::Concat(a, b) => PlayExpr::Concat(r(b), r(a)),
    }
}

impl FromStr for ScoreOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut words = s.split_whitespace();
        let op = words.next().ok_or("empty transform")?;
        let args: Vec<&str> = words.collect();
        ScoreOp::from_parts(op, &args)
    }
}

impl fmt::Display for ScoreOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreOp::Retrograde => f.write_str("retrograde"),
            ScoreOp::Mirror(a) => write!(f, "mirror {a}"),
            ScoreOp::Scale(k) => write!(f, "scale {k}"),
            ScoreOp::Level(n) => write!(f, "level {n}"),
            ScoreOp::Extent(n) => write!(f, "extent {n}"),
            ScoreOp::Repeat(n) => write!(f, "repeat {n}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notation::{parse, print};

    #[test]
    fn parses_ops() {
        assert_eq!("retrograde".parse(), Ok(ScoreOp::Retrograde));
        assert_eq!("mirror y".parse(), Ok(ScoreOp::Mirror(Axis::Y)));
        assert_eq!("scale 1.5".parse(), Ok(ScoreOp::Scale(Beats::new(3, 2).unwrap())));
        assert_eq!("level -1".parse(), Ok(ScoreOp::Level(-1)));
        assert!("repeat 0".parse::<ScoreOp>().is_err());
        assert!("spin 2".parse::<ScoreOp>().is_err());
        assert!("scale -2".parse::<ScoreOp>().is_err());
        for op in ["retrograde", "mirror z", "scale 3/2", "extent 2", "repeat 3"] {
            assert_eq!(op.parse::<ScoreOp>().unwrap().to_string(), op);
        }
    }

    #[test]
    fn retrograde_twice_reprints_identically() {
        let s = parse("phrase a { arm -> fwd_mid for 1\n use b\n theme [time: sudden] on 1..2 }\nphrase b { hold for 2\n arm -> left_low for 1/2 }\nplay a\nplay concat(b, retrograde(a))").unwrap();
        let (once, _) = ScoreOp::Retrograde.apply(&s).unwrap();
        let (twice, _) = ScoreOp::Retrograde.apply(&once).unwrap();
        assert_eq!(print(&twice), print(&s));
        assert_ne!(print(&once), print(&s));
    }

    #[test]
    fn repeat_tiles_the_playlist() {
        let s = parse("phrase a { hold for 1 }\nplay a").unwrap();
        let (r, _) = ScoreOp::Repeat(3).apply(&s).unwrap();
        assert_eq!(r.playlist.len(), 3);
    }
}
