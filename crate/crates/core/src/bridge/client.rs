use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{to_line, BatchEnd, Hello, ImageRequest, ServerRecord, Welcome, PROTOCOL_VERSION};
use crate::domain::Image;
use crate::oracle::{Classification, Classifier, OracleError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Where an out-of-process classifier lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// A subprocess speaking the protocol over its stdin and stdout.
    Command(Vec<String>),
    /// A `host:port` TCP server.
    Tcp(String),
}

impl Endpoint {
    /// Parses `cmd:<shell-quoted argv>` or `tcp:<host:port>`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        if let Some(cmd) = spec.strip_prefix("cmd:") {
            let argv = shlex::split(cmd).ok_or_else(|| format!("unbalanced quotes in `{cmd}`"))?;
            if argv.is_empty() {
                return Err("empty command".to_owned());
            }
            Ok(Self::Command(argv))
        } else if let Some(addr) = spec.strip_prefix("tcp:") {
            if addr.is_empty() {
                return Err("empty tcp address".to_owned());
            }
            Ok(Self::Tcp(addr.to_owned()))
        } else {
            Err(format!("endpoint `{spec}` must start with `cmd:` or `tcp:`"))
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Command(argv) => write!(f, "cmd:{}", shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_default()),
            Self::Tcp(addr) => write!(f, "tcp:{addr}"),
        }
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    broken: Option<String>,
}

/// A classifier reached over the wire protocol. One batch is in flight at a
/// time; concurrent callers queue on an internal lock.
pub struct RemoteClassifier {
    conn: Mutex<Connection>,
    child: Mutex<Option<Child>>,
    socket: Option<TcpStream>,
    classes: u32,
    timeout: Duration,
}

fn transport(e: impl fmt::Display) -> OracleError {
    OracleError::Transport(e.to_string())
}

fn spawn_reader(source: impl Read + Send + 'static) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

impl RemoteClassifier {
    pub fn connect(endpoint: &Endpoint) -> Result<Self, OracleError> {
        Self::connect_with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    pub fn connect_with_timeout(endpoint: &Endpoint, timeout: Duration) -> Result<Self, OracleError> {
        let (writer, lines, child, socket): (Box<dyn Write + Send>, _, _, _) = match endpoint {
            Endpoint::Command(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| transport(format!("spawning `{}`: {e}", argv[0])))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(stdin), spawn_reader(stdout), Some(child), None)
            }
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| transport(format!("connecting to {addr}: {e}")))?;
                stream.set_nodelay(true).map_err(transport)?;
                let read_half = stream.try_clone().map_err(transport)?;
                let handle = stream.try_clone().map_err(transport)?;
                (Box::new(stream), spawn_reader(read_half), None, Some(handle))
            }
        };
        let mut conn = Connection {
            writer,
            lines,
            next_id: 0,
            broken: None,
        };
        let classes = match conn.handshake(Instant::now() + timeout) {
            Ok(classes) => classes,
            Err(e) => {
                if let Some(mut child) = child {
                    let _ = child.kill();
                    let _ = child.wait();
                }
                return Err(e);
            }
        };
        Ok(Self {
            conn: Mutex::new(conn),
            child: Mutex::new(child),
            socket,
            classes,
            timeout,
        })
    }

    /// Class count announced by the server.
    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }
}

impl Connection {
    fn recv(&self, deadline: Instant) -> Result<String, OracleError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(transport(e)),
            Err(RecvTimeoutError::Disconnected) => Err(transport("connection closed by server")),
            Err(RecvTimeoutError::Timeout) => Err(OracleError::Timeout(wait)),
        }
    }

    fn send(&mut self, text: &str) -> Result<(), OracleError> {
        self.writer.write_all(text.as_bytes()).map_err(transport)
    }

    fn handshake(&mut self, deadline: Instant) -> Result<u32, OracleError> {
        self.send(&to_line(&Hello { rex_proto: PROTOCOL_VERSION }))?;
        self.writer.flush().map_err(transport)?;
        let line = self.recv(deadline)?;
        let welcome: Welcome =
            serde_json::from_str(&line).map_err(|e| OracleError::Malformed(format!("handshake `{line}`: {e}")))?;
        if welcome.rex_proto != PROTOCOL_VERSION {
            return Err(OracleError::VersionMismatch {
                expected: PROTOCOL_VERSION,
                got: welcome.rex_proto,
            });
        }
        if let Some(e) = welcome.error {
            return Err(transport(format!("server refused: {e}")));
        }
        welcome
            .classes
            .ok_or_else(|| OracleError::Malformed("handshake without class count".to_owned()))
    }

    fn round_trip(&mut self, images: &[Image], timeout: Duration) -> Result<Vec<Classification>, OracleError> {
        let first = self.next_id;
        self.next_id += images.len() as u64;
        let mut text = String::new();
        for (i, img) in images.iter().enumerate() {
            text.push_str(&to_line(&ImageRequest::new(first + i as u64, img)));
        }
        text.push_str(&to_line(&BatchEnd {
            batch_end: first + images.len() as u64 - 1,
        }));
        self.send(&text)?;
        self.writer.flush().map_err(transport)?;

        let deadline = Instant::now() + timeout;
        let mut out = Vec::with_capacity(images.len());
        for i in 0..images.len() {
            let expected = first + i as u64;
            let line = self.recv(deadline)?;
            let record: ServerRecord =
                serde_json::from_str(&line).map_err(|e| OracleError::Malformed(format!("`{line}`: {e}")))?;
            match record {
                ServerRecord::Result(r) if r.id == expected => out.push(r.into_classification()?),
                ServerRecord::Result(r) => {
                    return Err(OracleError::Malformed(format!("expected id {expected}, got {}", r.id)))
                }
                ServerRecord::Error(e) => {
                    return Err(OracleError::InvalidInput(format!("id {:?}: {}", e.id, e.error)))
                }
            }
        }
        Ok(out)
    }
}

impl Classifier for RemoteClassifier {
    fn classify_batch(&self, images: &[Image]) -> Result<Vec<Classification>, OracleError> {
        if images.is_empty() {
            return Ok(Vec::new());
        }
        let mut conn = self.conn.lock().map_err(|_| transport("connection lock poisoned"))?;
        if let Some(reason) = &conn.broken {
            return Err(transport(format!("connection unusable after earlier failure: {reason}")));
        }
        let result = conn.round_trip(images, self.timeout);
        if let Err(e) = &result {
            // a partial batch leaves unread lines behind; the stream cannot be resynchronized
            conn.broken = Some(e.to_string());
        }
        result
    }
}

impl Drop for RemoteClassifier {
    fn drop(&mut self) {
        if let Some(socket) = &self.socket {
            let _ = socket.shutdown(std::net::Shutdown::Both);
        }
        if let Ok(mut guard) = self.child.lock() {
            if let Some(mut child) = guard.take() {
                let _ = child.kill();
                let _ = child.wait();
            }
        }
    }
}
