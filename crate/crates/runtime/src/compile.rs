use std::sync::Arc;
use std::time::Instant;

use choreo_core::diag::{has_errors, Diagnostic};
use choreo_core::notation::{lint_mapped, parse_with, ParseOptions};
use choreo_core::platform::{Ecl, PlatformSpec};
use choreo_core::score::ScoreOp;
use choreo_core::synth::{compile_score_with, Compiled, SymbolicTrace, SynthConfig, SynthError};

/// Outcome of one recompile.
#[derive(Debug, Clone, PartialEq)]
pub struct CompileReport {
    pub ok: bool,
    /// Wall time of parse, transform, flatten and synthesis.
    pub latency_ms: f64,
    pub diagnostics: Vec<Diagnostic>,
    pub trace_length: usize,
    /// The flattened trace, when compilation succeeded.
    pub trace: Option<SymbolicTrace>,
}

/// Turns score text into a trajectory for one platform.
#[derive(Debug, Clone)]
pub struct Compiler {
    pub spec: Arc<PlatformSpec>,
    pub ecl: Arc<Ecl>,
    pub rate: f64,
    pub synth: SynthConfig,
}

impl Compiler {
    pub fn new(spec: PlatformSpec, ecl: Ecl, rate: f64) -> Self {
        Compiler {
            spec: Arc::new(spec),
            ecl: Arc::new(ecl),
            rate,
            synth: SynthConfig::default(),
        }
    }

    /// Parses `text`, applies the session's transforms in order, then
    /// synthesizes.
    pub fn compile(&self, text: &str, ops: &[ScoreOp]) -> (CompileReport, Option<Compiled>) {
        let started = Instant::now();
        let (diagnostics, compiled) = self.run(text, ops);
        let ok = compiled.is_some() && !has_errors(&diagnostics);
        let report = CompileReport {
            ok,
            latency_ms: started.elapsed().as_secs_f64() * 1e3,
            trace_length: compiled.as_ref().map_or(0, |c| c.trace.len()),
            trace: compiled.as_ref().map(|c| c.trace.clone()),
            diagnostics,
        };
        (report, compiled.filter(|_| ok))
    }

    fn run(&self, text: &str, ops: &[ScoreOp]) -> (Vec<Diagnostic>, Option<Compiled>) {
        let options = ParseOptions {
            labels: Some(self.spec.labels().map(String::from).collect()),
        };
        let parsed = match parse_with(text, &options) {
            Ok(p) => p,
            Err(diags) => return (diags, None),
        };
        let mut diags = lint_mapped(&parsed.score, &parsed.source_map);
        let mut score = parsed.score;
        for op in ops {
            match op.apply(&score) {
                Ok((s, warnings)) => {
                    score = s;
                    diags.extend(warnings);
                }
                Err(e) => {
                    diags.push(Diagnostic::error(format!("transform '{op}': {e}")));
                    return (diags, None);
                }
            }
        }
        match compile_score_with(&score, &self.spec, &self.ecl, self.rate, &self.synth) {
            Ok(c) => {
                diags.extend(c.warnings.iter().cloned());
                diags.extend(c.trajectory.notes.iter().map(Diagnostic::warning));
                (diags, Some(c))
            }
            Err(SynthError::MissingKeys(missing)) => {
                diags.extend(missing.iter().map(|e| Diagnostic::error(e.to_string())));
                (diags, None)
            }
            Err(SynthError::InvalidScore(d)) => {
                diags.extend(d);
                (diags, None)
            }
            Err(e) => {
                diags.push(Diagnostic::error(e.to_string()));
                (diags, None)
            }
        }
    }
}
