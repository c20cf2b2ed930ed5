//! HTTP client for remote denoisers.
//!
//! `POST {base}/v1/logprobs` takes
//! `{"id", "context": [tok], "corrupted": [tok | "[M]"], "targets": {"<pos>": tok}}`
//! and must answer `200` with `{"id", "logprobs": {"<pos>": x}}` where every
//! `x <= 0` is a natural-log probability. `GET {base}/v1/health` answers
//! `{"status": "ok", "vocab_size": N}`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::{Denoiser, DenoiserError, DenoiserQuery, DenoiserResponse};
use crate::text::Vocabulary;

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), timeout: Duration::from_secs(30), max_in_flight: 8 }
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteDenoiser {
    base: String,
    vocab: Vocabulary,
    agent: ureq::Agent,
    slots: Slots,
    next_id: AtomicU64,
}

fn violation(reason: impl Into<String>, payload: impl Into<String>) -> DenoiserError {
    DenoiserError::ProtocolViolation { reason: reason.into(), payload: payload.into() }
}

impl RemoteDenoiser {
    /// The vocabulary maps ids to the token strings sent over the wire.
    pub fn new(config: RemoteConfig, vocab: Vocabulary) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            base: config.endpoint.trim_end_matches('/').to_string(),
            vocab,
            agent,
            slots: Slots { free: Mutex::new(config.max_in_flight.max(1)), cv: Condvar::new() },
            next_id: AtomicU64::new(0),
        }
    }

    fn map_transport(&self, url: &str, err: ureq::Error) -> DenoiserError {
        match err {
            ureq::Error::Timeout(_) => DenoiserError::Timeout(url.to_string()),
            ureq::Error::Io(e) if e.kind() == std::io::ErrorKind::TimedOut => DenoiserError::Timeout(url.to_string()),
            other => DenoiserError::ConnectionFailed { endpoint: url.to_string(), reason: other.to_string() },
        }
    }

    /// Checks server liveness and returns its reported vocabulary size.
    pub fn health(&self) -> Result<usize, DenoiserError> {
        let url = format!("{}/v1/health", self.base);
        let mut resp = self.agent.get(&url).call().map_err(|e| self.map_transport(&url, e))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| self.map_transport(&url, e))?;
        if status != 200 {
            return Err(violation(format!("health returned HTTP {status}"), body));
        }
        let v: Value = serde_json::from_str(&body).map_err(|e| violation(e.to_string(), body.clone()))?;
        if v.get("status").and_then(Value::as_str) != Some("ok") {
            return Err(violation("health status is not \"ok\"", body));
        }
        v.get("vocab_size")
            .and_then(Value::as_u64)
            .map(|n| n as usize)
            .ok_or_else(|| violation("health lacks vocab_size", body))
    }

    /// Serializes a query to the wire request body.
    pub fn request_body(&self, id: &str, query: &DenoiserQuery) -> Result<Value, DenoiserError> {
        let tok =
            |i: u32| self.vocab.token(i).map(str::to_string).map_err(|e| DenoiserError::InvalidQuery(e.to_string()));
        let context = query.context().iter().map(|&i| tok(i)).collect::<Result<Vec<_>, _>>()?;
        let corrupted = query.corrupted().iter().map(|&i| tok(i)).collect::<Result<Vec<_>, _>>()?;
        let targets = query
            .targets()
            .iter()
            .map(|(p, &i)| Ok((p.to_string(), Value::String(tok(i)?))))
            .collect::<Result<serde_json::Map<_, _>, DenoiserError>>()?;
        Ok(json!({ "id": id, "context": context, "corrupted": corrupted, "targets": targets }))
    }

    /// Validates a response body against the query it answers.
    pub fn parse_response(id: &str, query: &DenoiserQuery, body: &str) -> Result<DenoiserResponse, DenoiserError> {
        let v: Value = serde_json::from_str(body).map_err(|e| violation(format!("malformed JSON: {e}"), body))?;
        if v.get("id").and_then(Value::as_str) != Some(id) {
            return Err(violation(format!("response id does not match request id {id:?}"), body));
        }
        let map =
            v.get("logprobs").and_then(Value::as_object).ok_or_else(|| violation("missing logprobs object", body))?;
        let mut logprobs = BTreeMap::new();
        for (key, val) in map {
            let pos: usize = key.parse().map_err(|_| violation(format!("non-decimal position key {key:?}"), body))?;
            if !query.targets().contains_key(&pos) {
                return Err(violation(format!("unrequested position {pos}"), body));
            }
            let lp = val.as_f64().ok_or_else(|| violation(format!("logprob at {pos} is not a number"), body))?;
            if !lp.is_finite() || lp > 0.0 {
                return Err(violation(format!("logprob at {pos} is {lp}, expected finite and <= 0"), body));
            }
            logprobs.insert(pos, lp);
        }
        if let Some(missing) = query.targets().keys().find(|p| !logprobs.contains_key(p)) {
            return Err(violation(format!("missing position {missing}"), body));
        }
        Ok(DenoiserResponse { logprobs })
    }
}

impl Denoiser for RemoteDenoiser {
    fn vocab_size(&self) -> usize {
        self.vocab.size()
    }

    fn query(&self, query: &DenoiserQuery) -> Result<DenoiserResponse, DenoiserError> {
        query.check_vocab(self.vocab.size())?;
        let id = format!("q{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let body = self.request_body(&id, query)?.to_string();
        let url = format!("{}/v1/logprobs", self.base);
        let _slot = self.slots.acquire();
        let mut resp = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .send(body.as_str())
            .map_err(|e| self.map_transport(&url, e))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| self.map_transport(&url, e))?;
        if status != 200 {
            return Err(violation(format!("HTTP status {status}"), text));
        }
        Self::parse_response(&id, query, &text)
    }
}
