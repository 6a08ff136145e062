//! Client that drives a query to completion by resubmitting `next` tokens,
//! one request at a time, retrying failed requests with the same token.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use bgp_core::{Bgp, SolutionMapping};
use bgp_server::{ErrorBody, PageOfResults, PageStats, QueryRequest};
use serde::Serialize;

pub use ureq::Agent;

/// HTTP agent that reports error statuses as responses rather than errors.
pub fn agent() -> Agent {
    Agent::config_builder().http_status_as_error(false).build().into()
}

#[derive(Debug, Clone)]
pub struct ClientConfig {
    /// Base URL of the server, e.g. `http://127.0.0.1:8000`.
    pub endpoint: String,
    /// Wall-clock budget for one query; `None` waits forever.
    pub deadline: Option<Duration>,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    /// Delay added before every request, to emulate network latency.
    pub latency: Option<Duration>,
    /// Stops the session before its next request when set.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl ClientConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            deadline: Some(Duration::from_secs(120)),
            initial_backoff: Duration::from_millis(10),
            max_backoff: Duration::from_secs(1),
            latency: None,
            cancel: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("server rejected the saved plan: {0}")]
    InvalidSavedState(String),
    #[error("server rejected the request ({status} {error}): {message}")]
    Rejected { status: u16, error: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Page,
    Overloaded,
    ServerError(u16),
    Transport(String),
}

/// One HTTP exchange, with times relative to the session start.
#[derive(Debug, Clone, Serialize)]
pub struct RequestRecord {
    pub started: Duration,
    pub finished: Duration,
    pub resumed: bool,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default)]
pub struct Execution {
    pub answers: Vec<SolutionMapping>,
    /// True when the last page carried no `next` token.
    pub complete: bool,
    pub request_count: usize,
    pub elapsed: Duration,
    /// Stats of every page received, in order.
    pub pages: Vec<PageStats>,
    pub requests: Vec<RequestRecord>,
}

enum Attempt {
    Page(PageOfResults),
    Retry,
}

/// State of one query: the current token, accumulated answers and a log of
/// every request made. Strictly sequential: a request is only sent after the
/// previous one has returned.
pub struct ClientSession {
    agent: ureq::Agent,
    config: ClientConfig,
    started: Instant,
    token: Option<String>,
    pending: Option<Bgp>,
    done: Execution,
}

/// Result of one [`ClientSession::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    /// A page arrived and the query has more.
    Continue,
    /// The query is complete.
    Complete,
    /// The deadline passed or the session was cancelled.
    Stopped,
}

impl ClientSession {
    pub fn new(config: ClientConfig) -> Self {
        Self { agent: agent(), config, started: Instant::now(), token: None, pending: None, done: Execution::default() }
    }

    /// Resets the session for `bgp` and restarts its clock.
    pub fn start(&mut self, bgp: Bgp) {
        self.started = Instant::now();
        self.token = None;
        self.pending = Some(bgp);
        self.done = Execution::default();
    }

    pub fn execution(&self) -> &Execution {
        &self.done
    }

    pub fn into_execution(mut self) -> Execution {
        self.done.elapsed = self.started.elapsed();
        self.done
    }

    fn remaining(&self) -> Option<Duration> {
        self.config.deadline.map(|d| d.saturating_sub(self.started.elapsed()))
    }

    fn stopped(&self) -> bool {
        self.remaining().is_some_and(|r| r.is_zero())
            || self.config.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    /// Obtains the next page, retrying until it arrives or the session stops.
    pub fn step(&mut self) -> Result<Progress, ClientError> {
        let request = match (&self.pending, &self.token) {
            (Some(bgp), _) => QueryRequest::Query(bgp.clone()),
            (None, Some(token)) => QueryRequest::Next(token.clone()),
            (None, None) => return Ok(Progress::Complete),
        };
        let mut backoff = self.config.initial_backoff;
        loop {
            if self.stopped() {
                self.done.elapsed = self.started.elapsed();
                return Ok(Progress::Stopped);
            }
            match self.attempt(&request)? {
                Attempt::Page(page) => {
                    self.pending = None;
                    self.done.answers.extend(page.bindings);
                    self.done.pages.push(page.stats);
                    self.token = page.next;
                    self.done.complete = self.token.is_none();
                    self.done.elapsed = self.started.elapsed();
                    return Ok(if self.done.complete { Progress::Complete } else { Progress::Continue });
                }
                Attempt::Retry => {
                    let pause = match self.remaining() {
                        Some(r) => backoff.min(r),
                        None => backoff,
                    };
                    thread::sleep(pause);
                    backoff = (backoff * 2).min(self.config.max_backoff);
                }
            }
        }
    }

    fn attempt(&mut self, request: &QueryRequest) -> Result<Attempt, ClientError> {
        if let Some(latency) = self.config.latency {
            thread::sleep(latency);
        }
        let mut builder = self.agent.post(format!("{}/sparql", self.config.endpoint));
        if let Some(remaining) = self.remaining() {
            builder = builder.config().timeout_global(Some(remaining.max(Duration::from_millis(1)))).build();
        }
        let started = self.started.elapsed();
        let result = builder.send_json(request);
        self.done.request_count += 1;
        let (outcome, attempt) = match result {
            Err(e) => (Outcome::Transport(e.to_string()), Ok(Attempt::Retry)),
            Ok(mut resp) => {
                let status = resp.status().as_u16();
                match status {
                    200 => match resp.body_mut().with_config().limit(u64::MAX).read_json::<PageOfResults>() {
                        Ok(page) => (Outcome::Page, Ok(Attempt::Page(page))),
                        Err(e) => (Outcome::Transport(e.to_string()), Ok(Attempt::Retry)),
                    },
                    503 => (Outcome::Overloaded, Ok(Attempt::Retry)),
                    s if s >= 500 => (Outcome::ServerError(s), Ok(Attempt::Retry)),
                    _ => {
                        let body: ErrorBody = resp
                            .body_mut()
                            .read_json()
                            .unwrap_or_else(|e| ErrorBody { error: "unknown".into(), message: e.to_string() });
                        let err = if body.error == "invalid_saved_state" {
                            ClientError::InvalidSavedState(body.message)
                        } else {
                            ClientError::Rejected { status, error: body.error, message: body.message }
                        };
                        (Outcome::ServerError(status), Err(err))
                    }
                }
            }
        };
        self.done.requests.push(RequestRecord {
            started,
            finished: self.started.elapsed(),
            resumed: matches!(request, QueryRequest::Next(_)),
            outcome,
        });
        attempt
    }

    /// Runs `bgp` until it completes, the deadline passes or the session is
    /// cancelled. Partial answers are returned with `complete = false`.
    pub fn execute(&mut self, bgp: Bgp) -> Result<Execution, ClientError> {
        self.start(bgp);
        while self.step()? == Progress::Continue {}
        self.done.elapsed = self.started.elapsed();
        Ok(self.done.clone())
    }
}

/// One-shot helper around [`ClientSession::execute`].
pub fn execute(config: ClientConfig, bgp: Bgp) -> Result<Execution, ClientError> {
    ClientSession::new(config).execute(bgp)
}
