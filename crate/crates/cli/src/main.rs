use std::io::{IsTerminal, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use choreo_core::diag::{has_errors, Diagnostic, Severity};
use choreo_core::notation::{lint_mapped, parse_with, print, ParseOptions};
use choreo_core::platform::{ecl_synthesize, forward_kinematics, load_ecl, load_platform};
use choreo_core::score::{Score, ScoreOp};
use choreo_core::synth::{flatten, trajectory_json, DEFAULT_RATE};
use choreo_runtime::{serve, Compiler, FrameMsg, ServeConfig, ServerMsg, UiAssets};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "choreo", version, about = "Compile movement scores onto robot platforms")]
struct Cli {
    /// How diagnostics and reports are written.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and lint a score.
    Check { file: PathBuf },
    /// Compile a score to a joint trajectory file.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Output path; defaults to the score's name with `.traj.json`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rewrite a score through a whole-score transform.
    Transform {
        file: PathBuf,
        /// One of retrograde, mirror, scale, level, extent, repeat.
        #[arg(long)]
        op: String,
        /// Arguments to the transform, e.g. `x` for mirror or `3/2` for scale.
        #[arg(long, num_args = 0.., allow_hyphen_values = true)]
        args: Vec<String>,
        /// Output path; defaults to standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pose library tools.
    Ecl {
        #[command(subcommand)]
        command: EclCommand,
    },
    /// Check a platform description and, optionally, a pose library for it.
    Validate {
        platform: PathBuf,
        #[arg(long)]
        ecl: Option<PathBuf>,
    },
    /// Compile a score and stream its frames to standard output.
    Play {
        file: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Write frames as fast as possible instead of in real time.
        #[arg(long)]
        fast: bool,
    },
    /// Watch a score, recompile on save and stream frames to clients.
    Serve {
        file: PathBuf,
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 7077)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Also serve the browser studio: the bundled page, or files from a
        /// directory given as `--ui=DIR`.
        #[arg(long, value_name = "DIR", require_equals = true, num_args = 0..=1)]
        ui: Option<Option<PathBuf>>,
    },
}

#[derive(Subcommand)]
enum EclCommand {
    /// Build a pose library by solving every requested key.
    Synth {
        #[arg(long)]
        platform: PathBuf,
        /// Output path; defaults to the platform's name with `.ecl.json`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Target {
    /// Platform description; defaults to the score's `platform` header.
    #[arg(long)]
    platform: Option<PathBuf>,
    /// Pose library; defaults to a `.ecl.json` beside the platform, else one
    /// is synthesized.
    #[arg(long)]
    ecl: Option<PathBuf>,
    /// Frames per second.
    #[arg(long, default_value_t = DEFAULT_RATE)]
    rate: f64,
}

/// A failure that is not about the score: bad paths, unreadable files.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type Outcome = Result<ExitCode, Fatal>;

struct Out {
    format: Format,
    color: bool,
}

impl Out {
    fn new(format: Format) -> Self {
        let color = match std::env::var("CHOREO_COLOR").as_deref() {
            Ok("never") => false,
            _ => std::io::stderr().is_terminal(),
        };
        Out { format, color }
    }

    fn diagnostic(&self, file: &Path, d: &Diagnostic) {
        let sev = match (self.color, d.severity) {
            (false, s) => s.to_string(),
            (true, Severity::Error) => "\x1b[31merror\x1b[0m".into(),
            (true, Severity::Warning) => "\x1b[33mwarning\x1b[0m".into(),
        };
        match d.span {
            Some(s) => eprintln!("{}:{}:{}: {sev}: {}", file.display(), s.line, s.column, d.message),
            None => eprintln!("{}: {sev}: {}", file.display(), d.message),
        }
    }

    /// Prints diagnostics in text mode; in JSON mode the caller folds them
    /// into its report.
    fn diagnostics(&self, file: &Path, ds: &[Diagnostic]) {
        if self.format == Format::Text {
            for d in ds {
                self.diagnostic(file, d);
            }
        }
    }

    fn json(&self, v: serde_json::Value) {
        println!("{v}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = Out::new(cli.format);
    match run(cli.command, &out) {
        Ok(code) => code,
        Err(Fatal(message)) => {
            match out.format {
                Format::Text => eprintln!("choreo: {message}"),
                Format::Json => out.json(json!({"ok": false, "error": message})),
            }
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, out: &Out) -> Outcome {
    match command {
        Command::Check { file } => check(&file, out),
        Command::Compile {
            file,
            target,
            output,
        } => compile(&file, &target, output, out),
        Command::Transform {
            file,
            op,
            args,
            output,
        } => transform(&file, &op, &args, output, out),
        Command::Ecl {
            command: EclCommand::Synth { platform, output },
        } => ecl_synth(&platform, output, out),
        Command::Validate { platform, ecl } => validate(&platform, ecl.as_deref(), out),
        Command::Play { file, target, fast } => play(&file, &target, fast, out),
        Command::Serve {
            file,
            target,
            port,
            host,
            ui,
        } => serve_cmd(file, &target, SocketAddr::new(host, port), ui, out),
    }
}

fn read(path: &Path) -> Result<String, Fatal> {
    std::fs::read_to_string(path).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fatal> {
    std::fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

/// Exit 1 on any error diagnostic, or when nothing was produced.
fn code(diags: &[Diagnostic], failed: bool) -> ExitCode {
    if failed || has_errors(diags) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

/// Parses and lints; `None` when the text does not parse.
fn load_score(text: &str) -> (Option<Score>, Vec<Diagnostic>) {
    match parse_with(text, &ParseOptions::default()) {
        Ok(parsed) => {
            let diags = lint_mapped(&parsed.score, &parsed.source_map);
            (Some(parsed.score), diags)
        }
        Err(diags) => (None, diags),
    }
}

fn check(file: &Path, out: &Out) -> Outcome {
    let text = read(file)?;
    let (score, mut diags) = load_score(&text);
    let mut summary = None;
    if let Some(s) = &score {
        match flatten(s) {
            Ok(trace) => {
                let beats = trace.total_beats();
                let seconds = beats.map_or(0.0, |b| b.as_f64() * 60.0 / s.tempo);
                summary = Some(json!({
                    "beats": beats.map_or(0.0, |b| b.as_f64()),
                    "beats_exact": beats.map_or("0".to_string(), |b| b.to_string()),
                    "tempo": s.tempo,
                    "seconds": seconds,
                    "actions": trace.len(),
                }));
            }
            Err(e) => diags.push(Diagnostic::error(e.to_string())),
        }
    }
    out.diagnostics(file, &diags);
    if out.format == Format::Json {
        let mut report = json!({
            "file": file,
            "ok": !has_errors(&diags),
            "diagnostics": diags,
        });
        if let (Some(m), Some(s)) = (report.as_object_mut(), summary) {
            m.extend(s.as_object().unwrap().clone());
        }
        out.json(report);
    }
    Ok(code(&diags, false))
}

fn platform_path(file: &Path, score_text: &str, target: &Target) -> Result<PathBuf, Fatal> {
    if let Some(p) = &target.platform {
        return Ok(p.clone());
    }
    // The header is read leniently here; real errors surface on compile.
    let header = parse_with(score_text, &ParseOptions::default())
        .ok()
        .and_then(|p| p.score.platform);
    match header {
        Some(h) => Ok(file.parent().unwrap_or(Path::new(".")).join(h)),
        None => Err(Fatal(format!(
            "{}: no platform given; pass --platform or add a `platform` header",
            file.display()
        ))),
    }
}

fn default_ecl_path(platform: &Path) -> PathBuf {
    let name = platform.file_name().and_then(|n| n.to_str()).unwrap_or("platform");
    let stem = name
        .strip_suffix(".eurdf.json")
        .or_else(|| name.strip_suffix(".json"))
        .unwrap_or(name);
    platform.with_file_name(format!("{stem}.ecl.json"))
}

fn load_target(file: &Path, text: &str, target: &Target) -> Result<Compiler, Fatal> {
    if !(target.rate.is_finite() && target.rate > 0.0) {
        return Err(Fatal(format!("--rate must be positive, got {}", target.rate)));
    }
    let platform = platform_path(file, text, target)?;
    let spec = load_platform(&platform)?;
    let ecl = match &target.ecl {
        Some(path) => load_ecl(path, &spec)?,
        None => {
            let beside = default_ecl_path(&platform);
            if beside.exists() {
                load_ecl(&beside, &spec)?
            } else {
                eprintln!(
                    "choreo: no pose library at {}; synthesizing one",
                    beside.display()
                );
                ecl_synthesize(&spec).0
            }
        }
    };
    Ok(Compiler::new(spec, ecl, target.rate))
}

fn compile(file: &Path, target: &Target, output: Option<PathBuf>, out: &Out) -> Outcome {
    let text = read(file)?;
    let compiler = load_target(file, &text, target)?;
    let (report, compiled) = compiler.compile(&text, &[]);
    out.diagnostics(file, &report.diagnostics);
    let output = output.unwrap_or_else(|| file.with_extension("traj.json"));
    let mut summary = json!({
        "file": file,
        "ok": report.ok,
        "diagnostics": report.diagnostics,
        "latency_ms": report.latency_ms,
    });
    if let Some(c) = &compiled {
        write(&output, &trajectory_json(&c.trajectory, &c.trace))?;
        let m = summary.as_object_mut().unwrap();
        m.insert("output".into(), json!(output));
        m.insert("frames".into(), json!(c.trajectory.frames.len()));
        m.insert("seconds".into(), json!(c.trajectory.end_time()));
    }
    if out.format == Format::Json {
        out.json(summary);
    }
    Ok(code(&report.diagnostics, compiled.is_none()))
}

fn transform(file: &Path, op: &str, args: &[String], output: Option<PathBuf>, out: &Out) -> Outcome {
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let op = ScoreOp::from_parts(op, &args).map_err(Fatal)?;
    let text = read(file)?;
    let (score, mut diags) = load_score(&text);
    let result = score.map(|s| op.apply(&s));
    let rewritten = match result {
        Some(Ok((s, warnings))) => {
            diags.extend(warnings);
            Some(print(&s))
        }
        Some(Err(e)) => {
            diags.push(Diagnostic::error(format!("transform '{op}': {e}")));
            None
        }
        None => None,
    };
    out.diagnostics(file, &diags);
    let failed = rewritten.is_none();
    if let Some(text) = &rewritten {
        match &output {
            Some(path) => write(path, text)?,
            None if out.format == Format::Text => {
                std::io::stdout().write_all(text.as_bytes())?;
            }
            None => {}
        }
    }
    if out.format == Format::Json {
        let mut report = json!({"file": file, "ok": !failed, "diagnostics": diags});
        let m = report.as_object_mut().unwrap();
        match (&output, &rewritten) {
            (Some(path), Some(_)) => m.insert("output".into(), json!(path)),
            (None, Some(text)) => m.insert("score".into(), json!(text)),
            _ => None,
        };
        out.json(report);
    }
    Ok(code(&diags, failed))
}

fn ecl_synth(platform: &Path, output: Option<PathBuf>, out: &Out) -> Outcome {
    let spec = load_platform(platform)?;
    let (ecl, coverage) = ecl_synthesize(&spec);
    let output = output.unwrap_or_else(|| default_ecl_path(platform));
    write(&output, &ecl.to_json())?;
    match out.format {
        Format::Text => {
            eprintln!(
                "{}: {} of {} poses ({:.1}%)",
                output.display(),
                coverage.present,
                coverage.requested,
                100.0 * coverage.fraction()
            );
            for m in &coverage.missing {
                eprintln!("  missing {}: {}", m.key, m.reason);
            }
        }
        Format::Json => {
            eprintln!("{}", serde_json::to_string(&coverage)?);
            out.json(json!({"ok": true, "output": output}));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn validate(platform: &Path, ecl: Option<&Path>, out: &Out) -> Outcome {
    let mut problems: Vec<(PathBuf, String, String)> = Vec::new();
    let spec = match load_platform(platform) {
        Ok(s) => Some(s),
        Err(e) if e.violations().is_empty() => return Err(e.into()),
        Err(e) => {
            for v in e.violations() {
                problems.push((platform.to_path_buf(), v.pointer.clone(), v.message.clone()));
            }
            None
        }
    };
    if let (Some(spec), Some(path)) = (&spec, ecl) {
        match load_ecl(path, spec) {
            Ok(_) => {}
            Err(e) if e.violations().is_empty() => return Err(e.into()),
            Err(e) => {
                for v in e.violations() {
                    problems.push((path.to_path_buf(), v.pointer.clone(), v.message.clone()));
                }
            }
        }
    }
    match out.format {
        Format::Text => {
            for (path, pointer, message) in &problems {
                eprintln!("{}: {pointer}: {message}", path.display());
            }
        }
        Format::Json => out.json(json!({
            "ok": problems.is_empty(),
            "violations": problems
                .iter()
                .map(|(path, pointer, message)| json!({"file": path, "pointer": pointer, "message": message}))
                .collect::<Vec<_>>(),
        })),
    }
    Ok(if problems.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn play(file: &Path, target: &Target, fast: bool, out: &Out) -> Outcome {
    let text = read(file)?;
    let compiler = load_target(file, &text, target)?;
    let (report, compiled) = compiler.compile(&text, &[]);
    out.diagnostics(file, &report.diagnostics);
    let Some(c) = compiled else {
        if out.format == Format::Json {
            out.json(json!({"file": file, "ok": false, "diagnostics": report.diagnostics}));
        }
        return Ok(ExitCode::from(1));
    };
    let started = Instant::now();
    let mut stdout = std::io::stdout().lock();
    for f in &c.trajectory.frames {
        if !fast {
            let due = Duration::from_secs_f64(f.t);
            if let Some(wait) = due.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
        let endpoints = forward_kinematics(&compiler.spec, &f.q)?
            .iter()
            .map(|v| [v.x, v.y, v.z])
            .collect();
        let line = ServerMsg::Frame(FrameMsg {
            trajectory_id: 1,
            t: f.t,
            q: f.q.0.clone(),
            endpoints,
            trace_index: f.trace_index,
            blend: None,
        })
        .to_line();
        if writeln!(stdout, "{line}").is_err() {
            // Downstream closed; stop quietly.
            break;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn serve_cmd(
    file: PathBuf,
    target: &Target,
    addr: SocketAddr,
    ui: Option<Option<PathBuf>>,
    out: &Out,
) -> Outcome {
    let text = read(&file)?;
    let compiler = load_target(&file, &text, target)?;
    let ui = ui.map(|dir| match dir {
        Some(d) => UiAssets::Dir(d),
        None => UiAssets::Bundled,
    });
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let handle = serve(ServeConfig {
            score: file,
            compiler,
            addr,
            ui,
        })
        .await?;
        match out.format {
            Format::Text => eprintln!("choreo: serving on {}", handle.local_addr()),
            Format::Json => out.json(json!({"listening": handle.local_addr()})),
        }
        handle.wait().await;
        Ok::<_, Fatal>(ExitCode::SUCCESS)
    })
}
