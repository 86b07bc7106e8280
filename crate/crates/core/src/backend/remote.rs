//! Blocking HTTP client for `POST {endpoint}/decide`.

use std::path::PathBuf;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::wire::{validate_response, DecisionRequest, DecisionResponse};
use super::{BackendError, DecisionBackend};

/// Environment variable holding an optional bearer token.
pub const TOKEN_ENV: &str = "DYNAV_BEARER_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    /// Base URL; requests go to `{endpoint}/decide`.
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    /// Directory of `<template_id>.txt` prompt templates.
    pub template_dir: Option<PathBuf>,
    #[serde(skip)]
    pub bearer_token: Option<String>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            endpoint: String::new(),
            timeout_ms: 10_000,
            max_retries: 2,
            backoff_base_ms: 250,
            template_dir: None,
            bearer_token: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.endpoint.trim().is_empty() {
            return Err(BackendError::Unavailable("no endpoint configured".into()));
        }
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(BackendError::Unavailable(format!(
                "endpoint `{}` is not an http(s) URL",
                self.endpoint
            )));
        }
        if self.timeout_ms == 0 {
            return Err(BackendError::Unavailable("timeout_ms must be > 0".into()));
        }
        Ok(())
    }
}

pub struct RemoteBackend {
    cfg: BackendConfig,
    url: String,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(mut cfg: BackendConfig) -> Result<Self, BackendError> {
        cfg.validate()?;
        if cfg.bearer_token.is_none() {
            cfg.bearer_token = std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty());
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/decide", cfg.endpoint.trim_end_matches('/'));
        Ok(RemoteBackend { cfg, url, agent })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn with_template(&self, req: &DecisionRequest) -> DecisionRequest {
        let mut req = req.clone();
        if let (None, Some(dir)) = (&req.template, &self.cfg.template_dir) {
            let path = dir.join(format!("{}.txt", req.template_id));
            match std::fs::read_to_string(&path) {
                Ok(t) => req.template = Some(t),
                Err(e) => warn!("template {} unreadable: {e}", path.display()),
            }
        }
        req
    }

    fn attempt(&self, req: &DecisionRequest) -> Result<DecisionResponse, Attempt> {
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(t) = &self.cfg.bearer_token {
            call = call.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = call.send_json(req).map_err(classify)?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(classify)?;
        match status {
            200..=299 => serde_json::from_str(&body)
                .map_err(|e| Attempt::Fatal(BackendError::SchemaViolation(format!("bad response body: {e}")))),
            500..=599 => Err(Attempt::Retry(BackendError::Transport(format!("server error {status}")))),
            _ => Err(Attempt::Fatal(BackendError::SchemaViolation(format!(
                "status {status}: {}",
                body.trim()
            )))),
        }
    }
}

enum Attempt {
    Retry(BackendError),
    Fatal(BackendError),
}

fn classify(e: ureq::Error) -> Attempt {
    match e {
        ureq::Error::Timeout(_) => Attempt::Retry(BackendError::Timeout),
        ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => Attempt::Retry(BackendError::Timeout),
        ureq::Error::Json(e) => Attempt::Fatal(BackendError::SchemaViolation(e.to_string())),
        other => Attempt::Retry(BackendError::Transport(other.to_string())),
    }
}

impl DecisionBackend for RemoteBackend {
    fn decide(&self, req: &DecisionRequest) -> Result<DecisionResponse, BackendError> {
        req.validate()?;
        let req = self.with_template(req);
        let mut last = BackendError::Unavailable("no attempt made".into());
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                let wait = self.cfg.backoff_base_ms.saturating_mul(1 << (attempt - 1).min(16));
                debug!("retry {attempt} of {} in {wait} ms", self.cfg.max_retries);
                thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&req) {
                Ok(resp) => return validate_response(&req, resp),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(e)) => {
                    warn!("{} request for step {} failed: {e}", req.kind.as_str(), req.step);
                    last = e;
                }
            }
        }
        Err(last)
    }
}
