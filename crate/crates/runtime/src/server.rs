//! The daemon: file watch, debounce, the frame clock and client connections.
//!
//! One task owns the [`Session`]. Everything else talks to it over a command
//! channel and hears back on a broadcast channel of wire lines.

use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use notify::{EventKind, RecursiveMode, Watcher};
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::JoinHandle;
use tokio::time::{sleep_until, Instant, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message;

use crate::compile::{CompileReport, Compiler};
use crate::session::Session;
use crate::wire::{parse_client, ClientMsg, ServerMsg};

/// Saves closer together than this are compiled once.
pub const DEBOUNCE: Duration = Duration::from_millis(50);
/// How long a new connection may stay silent before it is treated as a raw
/// line client.
const SNIFF_TIMEOUT: Duration = Duration::from_millis(100);
const MAX_REQUEST_HEAD: usize = 8192;

const BUNDLED_INDEX: &str = include_str!("../assets/index.html");

#[derive(Debug, Clone)]
pub enum UiAssets {
    /// The page compiled into the binary.
    Bundled,
    /// Files under a directory, `index.html` at the root.
    Dir(PathBuf),
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub score: PathBuf,
    pub compiler: Compiler,
    pub addr: SocketAddr,
    pub ui: Option<UiAssets>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("cannot watch {path}: {source}")]
    Watch {
        path: PathBuf,
        source: notify::Error,
    },
}

/// A running daemon.
pub struct ServerHandle {
    local_addr: SocketAddr,
    shutdown: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting, stops the clock and waits for both.
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }

    /// Runs until the process is interrupted.
    pub async fn wait(self) {
        let _ = tokio::signal::ctrl_c().await;
        self.shutdown().await;
    }
}

enum Command {
    FileChanged,
    Control {
        msg: ClientMsg,
        reply: mpsc::UnboundedSender<String>,
    },
    /// The lines a client sees on connecting: hello, the last compile and
    /// the current state.
    Snapshot(oneshot::Sender<Vec<String>>),
}

fn compile_msg(report: &CompileReport, trajectory_id: Option<u64>) -> ServerMsg {
    ServerMsg::Compile {
        ok: report.ok,
        latency_ms: report.latency_ms,
        diagnostics: report.diagnostics.clone(),
        trajectory_id,
        trace_length: report.trace_length,
    }
}

/// Binds, compiles the score once and starts serving.
pub async fn serve(config: ServeConfig) -> Result<ServerHandle, ServeError> {
    let listener = TcpListener::bind(config.addr)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.addr,
            source,
        })?;
    let local_addr = listener.local_addr().map_err(|source| ServeError::Bind {
        addr: config.addr,
        source,
    })?;

    let (cmd_tx, cmd_rx) = mpsc::unbounded_channel();
    let watcher = watch_score(&config.score, cmd_tx.clone())?;
    let (lines, _) = broadcast::channel::<Arc<str>>(4096);
    let (shutdown, shutdown_rx) = watch::channel(false);

    let mut session = Session::new(config.compiler);
    load(&mut session, &config.score);

    let clock = tokio::spawn(run_session(
        session,
        config.score,
        watcher,
        cmd_rx,
        lines.clone(),
        shutdown_rx.clone(),
    ));
    let ui = config.ui.map(Arc::new);
    let accept = tokio::spawn(accept_loop(listener, cmd_tx, lines, ui, shutdown_rx));
    Ok(ServerHandle {
        local_addr,
        shutdown,
        tasks: vec![clock, accept],
    })
}

fn watch_score(
    score: &Path,
    tx: mpsc::UnboundedSender<Command>,
) -> Result<notify::RecommendedWatcher, ServeError> {
    let name = score.file_name().map(|n| n.to_owned());
    let dir = match score.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let err = |source| ServeError::Watch {
        path: dir.clone(),
        source,
    };
    // Editors often replace the file rather than write it in place, so watch
    // the directory and filter on the name.
    let mut watcher = notify::recommended_watcher(move |res: notify::Result<notify::Event>| {
        let Ok(event) = res else { return };
        if !matches!(event.kind, EventKind::Modify(_) | EventKind::Create(_)) {
            return;
        }
        if event.paths.iter().any(|p| p.file_name() == name.as_deref()) {
            let _ = tx.send(Command::FileChanged);
        }
    })
    .map_err(err)?;
    watcher.watch(&dir, RecursiveMode::NonRecursive).map_err(err)?;
    Ok(watcher)
}

fn load(session: &mut Session, path: &Path) -> CompileReport {
    match std::fs::read_to_string(path) {
        Ok(text) => session.load_source(text),
        Err(e) => {
            let report = CompileReport {
                ok: false,
                latency_ms: 0.0,
                diagnostics: vec![choreo_core::diag::Diagnostic::error(format!(
                    "cannot read {}: {e}",
                    path.display()
                ))],
                trace_length: 0,
                trace: None,
            };
            session.report_failure(report.clone());
            report
        }
    }
}

async fn run_session(
    mut session: Session,
    score: PathBuf,
    _watcher: notify::RecommendedWatcher,
    mut commands: mpsc::UnboundedReceiver<Command>,
    lines: broadcast::Sender<Arc<str>>,
    mut shutdown: watch::Receiver<bool>,
) {
    let send = |msg: ServerMsg| {
        let _ = lines.send(msg.to_line().into());
    };
    let mut clock = tokio::time::interval(Duration::from_secs_f64(1.0 / session.rate()));
    clock.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut deadline: Option<Instant> = None;

    loop {
        let debounce = async {
            match deadline {
                Some(d) => sleep_until(d).await,
                None => std::future::pending().await,
            }
        };
        tokio::select! {
            _ = shutdown.changed() => break,
            _ = debounce => {
                deadline = None;
                let report = load(&mut session, &score);
                send(compile_msg(&report, session.trajectory_id()));
                send(ServerMsg::State(session.state_msg()));
            }
            cmd = commands.recv() => match cmd {
                None => break,
                Some(Command::FileChanged) => {
                    // The first event of a burst fixes the deadline; later
                    // ones ride along.
                    deadline.get_or_insert_with(|| Instant::now() + DEBOUNCE);
                }
                Some(Command::Control { msg, reply }) => match session.handle_control(msg) {
                    Ok((_, report)) => {
                        if let Some(r) = report {
                            send(compile_msg(&r, session.trajectory_id()));
                        }
                        send(ServerMsg::State(session.state_msg()));
                    }
                    Err(message) => {
                        let _ = reply.send(ServerMsg::Error { message }.to_line());
                    }
                },
                Some(Command::Snapshot(reply)) => {
                    let compiler = session.compiler();
                    let mut out = vec![ServerMsg::Hello {
                        platform: (*compiler.spec).clone(),
                        rate: compiler.rate,
                    }
                    .to_line()];
                    if let Some(r) = session.last_report() {
                        out.push(compile_msg(r, session.trajectory_id()).to_line());
                    }
                    out.push(ServerMsg::State(session.state_msg()).to_line());
                    let _ = reply.send(out);
                }
            },
            _ = clock.tick() => {
                if let Some(tick) = session.tick() {
                    send(ServerMsg::Frame(tick.frame));
                    if tick.state_due {
                        send(ServerMsg::State(session.state_msg()));
                    }
                }
            }
        }
    }
}

async fn accept_loop(
    listener: TcpListener,
    commands: mpsc::UnboundedSender<Command>,
    lines: broadcast::Sender<Arc<str>>,
    ui: Option<Arc<UiAssets>>,
    mut shutdown: watch::Receiver<bool>,
) {
    loop {
        tokio::select! {
            _ = shutdown.changed() => break,
            accepted = listener.accept() => {
                let Ok((stream, peer)) = accepted else { continue };
                let commands = commands.clone();
                let lines = lines.subscribe();
                let ui = ui.clone();
                tokio::spawn(async move {
                    if let Err(e) = connection(stream, commands, lines, ui).await {
                        tracing::debug!(%peer, "connection closed: {e}");
                    }
                });
            }
        }
    }
}

/// Waits briefly for a request head. Browsers speak first; line clients may
/// not.
async fn sniff(stream: &TcpStream) -> std::io::Result<Option<String>> {
    let mut buf = vec![0u8; MAX_REQUEST_HEAD];
    let started = Instant::now();
    loop {
        let n = match tokio::time::timeout(SNIFF_TIMEOUT, stream.peek(&mut buf)).await {
            Ok(n) => n?,
            Err(_) => return Ok(None),
        };
        if n == 0 {
            return Ok(None);
        }
        if !buf[..n.min(4)].starts_with(&b"GET "[..n.min(4)]) {
            return Ok(None);
        }
        let head = &buf[..n];
        if n >= 4 && (head.windows(4).any(|w| w == b"\r\n\r\n") || n == MAX_REQUEST_HEAD) {
            return Ok(Some(String::from_utf8_lossy(head).into_owned()));
        }
        if started.elapsed() > Duration::from_secs(2) {
            return Ok(None);
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
}

async fn connection(
    stream: TcpStream,
    commands: mpsc::UnboundedSender<Command>,
    lines: broadcast::Receiver<Arc<str>>,
    ui: Option<Arc<UiAssets>>,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    stream.set_nodelay(true)?;
    match sniff(&stream).await? {
        None => raw_client(stream, commands, lines).await,
        Some(head) => {
            let lower = head.to_ascii_lowercase();
            if lower.contains("upgrade: websocket") {
                socket_client(stream, commands, lines).await
            } else {
                static_asset(stream, &head, ui.as_deref()).await
            }
        }
    }
}

async fn snapshot(commands: &mpsc::UnboundedSender<Command>) -> Option<Vec<String>> {
    let (tx, rx) = oneshot::channel();
    commands.send(Command::Snapshot(tx)).ok()?;
    rx.await.ok()
}

/// Forwards a client line to the session. Malformed lines are answered to
/// the sender only.
fn dispatch(line: &str, commands: &mpsc::UnboundedSender<Command>, reply: &mpsc::UnboundedSender<String>) {
    let line = line.trim();
    if line.is_empty() {
        return;
    }
    match parse_client(line) {
        Ok(msg) => {
            let _ = commands.send(Command::Control {
                msg,
                reply: reply.clone(),
            });
        }
        Err(message) => {
            let _ = reply.send(ServerMsg::Error { message }.to_line());
        }
    }
}

async fn raw_client(
    stream: TcpStream,
    commands: mpsc::UnboundedSender<Command>,
    mut lines: broadcast::Receiver<Arc<str>>,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let (read, mut write) = stream.into_split();
    let mut input = BufReader::new(read).lines();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<String>();
    for line in snapshot(&commands).await.unwrap_or_default() {
        write.write_all(format!("{line}\n").as_bytes()).await?;
    }
    loop {
        tokio::select! {
            line = input.next_line() => match line? {
                Some(l) => dispatch(&l, &commands, &reply_tx),
                None => return Ok(()),
            },
            Some(r) = replies.recv() => write.write_all(format!("{r}\n").as_bytes()).await?,
            msg = lines.recv() => match msg {
                Ok(l) => write.write_all(format!("{l}\n").as_bytes()).await?,
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => return Ok(()),
            },
        }
    }
}

async fn socket_client(
    stream: TcpStream,
    commands: mpsc::UnboundedSender<Command>,
    mut lines: broadcast::Receiver<Arc<str>>,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let ws = tokio_tungstenite::accept_async(stream).await?;
    let (mut sink, mut input) = ws.split();
    let (reply_tx, mut replies) = mpsc::unbounded_channel::<String>();
    for line in snapshot(&commands).await.unwrap_or_default() {
        sink.send(Message::text(line)).await?;
    }
    loop {
        tokio::select! {
            msg = input.next() => match msg {
                Some(Ok(Message::Text(text))) => {
                    for l in text.lines() {
                        dispatch(l, &commands, &reply_tx);
                    }
                }
                Some(Ok(Message::Close(_))) | None => return Ok(()),
                Some(Ok(_)) => {}
                Some(Err(e)) => return Err(e.into()),
            },
            Some(r) = replies.recv() => sink.send(Message::text(r)).await?,
            msg = lines.recv() => match msg {
                Ok(l) => sink.send(Message::text(l.to_string())).await?,
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => return Ok(()),
            },
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// Resolves a request path against the asset root, refusing anything that
/// would leave it.
fn asset_path(request: &str) -> Option<PathBuf> {
    let path = request.split(['?', '#']).next().unwrap_or("/");
    let rel = path.trim_start_matches('/');
    let rel = if rel.is_empty() { "index.html" } else { rel };
    let rel = Path::new(rel);
    rel.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then(|| rel.to_path_buf())
}

fn lookup_asset(ui: Option<&UiAssets>, request: &str) -> Option<(Vec<u8>, &'static str)> {
    let rel = asset_path(request)?;
    match ui? {
        UiAssets::Bundled => (rel == Path::new("index.html"))
            .then(|| (BUNDLED_INDEX.as_bytes().to_vec(), content_type(&rel))),
        UiAssets::Dir(root) => {
            let body = std::fs::read(root.join(&rel)).ok()?;
            Some((body, content_type(&rel)))
        }
    }
}

async fn static_asset(
    mut stream: TcpStream,
    head: &str,
    ui: Option<&UiAssets>,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    // Drain the request head that was only peeked.
    let end = head.find("\r\n\r\n").map_or(head.len(), |i| i + 4);
    let mut sink = vec![0u8; end];
    stream.read_exact(&mut sink).await?;

    let target = head.split_whitespace().nth(1).unwrap_or("/");
    let response = match lookup_asset(ui, target) {
        Some((body, kind)) => {
            let mut r = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: {kind}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                body.len()
            )
            .into_bytes();
            r.extend(body);
            r
        }
        None => {
            let body = "not found\n";
            format!(
                "HTTP/1.1 404 Not Found\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .into_bytes()
        }
    };
    stream.write_all(&response).await?;
    stream.shutdown().await?;
    Ok(())
}
