//! Scripted `dynav/1` server for protocol and integration tests.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use tiny_http::{Header, Response, Server};

use super::wire::{DecisionRequest, RequestKind};
use super::BackendError;

const WORKERS: usize = 4;

/// One canned reply. Entries with a `step` match only that step and take
/// precedence over entries without one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub kind: RequestKind,
    #[serde(default)]
    pub step: Option<u64>,
    /// Sent verbatim as the response body.
    pub response: serde_json::Value,
    #[serde(default)]
    pub delay_ms: u64,
    /// Answer the first `fail_first` matching requests with HTTP 503.
    #[serde(default)]
    pub fail_first: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StubScript {
    pub entries: Vec<ScriptEntry>,
}

impl StubScript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::SchemaViolation(format!("{}: {e}", path.display())))
    }

    pub fn push(&mut self, kind: RequestKind, step: Option<u64>, response: serde_json::Value) -> &mut ScriptEntry {
        self.entries.push(ScriptEntry {
            kind,
            step,
            response,
            delay_ms: 0,
            fail_first: 0,
        });
        self.entries.last_mut().unwrap()
    }

    fn lookup(&self, kind: RequestKind, step: u64) -> Option<usize> {
        let exact = self
            .entries
            .iter()
            .position(|e| e.kind == kind && e.step == Some(step));
        exact.or_else(|| self.entries.iter().position(|e| e.kind == kind && e.step.is_none()))
    }
}

struct Shared {
    script: StubScript,
    failures_left: Mutex<Vec<u32>>,
    log: Mutex<Vec<DecisionRequest>>,
    stop: AtomicBool,
}

pub struct StubServer {
    server: Arc<Server>,
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
    port: u16,
}

impl StubServer {
    /// Binds `127.0.0.1:port` (0 picks a free port) and starts serving.
    pub fn serve(port: u16, script: StubScript) -> Result<Self, BackendError> {
        let server = Server::http(("127.0.0.1", port))
            .map_err(|e| BackendError::BindFailure(format!("port {port}: {e}")))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| BackendError::BindFailure("not an IP listener".into()))?;
        let server = Arc::new(server);
        let shared = Arc::new(Shared {
            failures_left: Mutex::new(script.entries.iter().map(|e| e.fail_first).collect()),
            script,
            log: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
        });
        let workers = (0..WORKERS)
            .map(|_| {
                let (server, shared) = (Arc::clone(&server), Arc::clone(&shared));
                thread::spawn(move || {
                    while !shared.stop.load(Ordering::Relaxed) {
                        match server.recv_timeout(Duration::from_millis(50)) {
                            Ok(Some(req)) => handle(&shared, req),
                            Ok(None) => {}
                            Err(e) => {
                                warn!("stub receive failed: {e}");
                                break;
                            }
                        }
                    }
                })
            })
            .collect();
        Ok(StubServer {
            server,
            shared,
            workers,
            port,
        })
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// Requests received so far, in arrival order.
    pub fn requests(&self) -> Vec<DecisionRequest> {
        self.shared.log.lock().unwrap().clone()
    }

    /// Blocks until `shutdown` is called from elsewhere or the flag is set.
    pub fn wait(&self, flag: &AtomicBool) {
        while !flag.load(Ordering::Relaxed) {
            thread::sleep(Duration::from_millis(100));
        }
    }

    pub fn shutdown(mut self) {
        self.stop_workers();
    }

    fn stop_workers(&mut self) {
        self.shared.stop.store(true, Ordering::Relaxed);
        self.server.unblock();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop_workers();
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").unwrap()
}

fn handle(shared: &Shared, mut req: tiny_http::Request) {
    let reply = |req: tiny_http::Request, code: u16, body: String| {
        let resp = Response::from_string(body)
            .with_status_code(code)
            .with_header(json_header());
        if let Err(e) = req.respond(resp) {
            debug!("stub reply failed: {e}");
        }
    };
    if req.method() != &tiny_http::Method::Post || req.url() != "/decide" {
        return reply(req, 404, r#"{"error":"not found"}"#.into());
    }
    let mut body = String::new();
    if let Err(e) = req.as_reader().read_to_string(&mut body) {
        return reply(req, 400, format!(r#"{{"error":"{e}"}}"#));
    }
    let parsed: DecisionRequest = match serde_json::from_str(&body) {
        Ok(r) => r,
        Err(e) => return reply(req, 400, serde_json::json!({ "error": e.to_string() }).to_string()),
    };
    let (kind, step) = (parsed.kind, parsed.step);
    shared.log.lock().unwrap().push(parsed);
    let Some(k) = shared.script.lookup(kind, step) else {
        let msg = format!("no scripted {} response for step {step}", kind.as_str());
        return reply(req, 404, serde_json::json!({ "error": msg }).to_string());
    };
    let entry = &shared.script.entries[k];
    if entry.delay_ms > 0 {
        thread::sleep(Duration::from_millis(entry.delay_ms));
    }
    {
        let mut left = shared.failures_left.lock().unwrap();
        if left[k] > 0 {
            left[k] -= 1;
            drop(left);
            return reply(req, 503, r#"{"error":"scripted failure"}"#.into());
        }
    }
    reply(req, 200, entry.response.to_string());
}
