use std::sync::Arc;
use std::time::{Duration, Instant};

use bgp_core::engine::Halt;
use bgp_core::{build_plan, Dataset, EngineError, Pipeline, Quantum, SavedPlanState};

use crate::protocol::{PageOfResults, PageStats, QueryRequest};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("malformed query: {0}")]
    MalformedQuery(String),
    #[error("invalid saved state: {0}")]
    InvalidSavedState(String),
    #[error("request queue is full")]
    Overloaded,
    #[error("server is shutting down")]
    Unavailable,
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::MalformedQuery(_) => "malformed_query",
            ServiceError::InvalidSavedState(_) => "invalid_saved_state",
            ServiceError::Overloaded => "overloaded",
            ServiceError::Unavailable => "unavailable",
        }
    }
}

impl From<EngineError> for ServiceError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidSavedState(m) => ServiceError::InvalidSavedState(m),
            other => ServiceError::InvalidSavedState(other.to_string()),
        }
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Runs one quantum of one request. Holds nothing between calls but the
/// dataset and configuration.
#[derive(Debug, Clone)]
pub struct QueryService {
    dataset: Arc<Dataset>,
    quantum: Quantum,
    max_page_results: Option<usize>,
    epoch: Instant,
}

impl QueryService {
    pub fn new(dataset: Arc<Dataset>, quantum: Quantum, max_page_results: Option<usize>) -> Self {
        assert!(max_page_results != Some(0), "page size must be positive");
        Self { dataset, quantum, max_page_results, epoch: Instant::now() }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn quantum(&self) -> Quantum {
        self.quantum
    }

    /// Microseconds since the service was created.
    pub fn now_us(&self) -> u64 {
        self.epoch.elapsed().as_micros() as u64
    }

    pub fn execute(&self, request: &QueryRequest) -> Result<PageOfResults, ServiceError> {
        let started_us = self.now_us();
        let dataset = &*self.dataset;
        let load_started = Instant::now();
        let (mut pipeline, load) = match request {
            QueryRequest::Query(bgp) => (Pipeline::new(dataset, &build_plan(dataset, bgp)), Duration::ZERO),
            QueryRequest::Next(token) => {
                let state = SavedPlanState::from_token(token)?;
                (Pipeline::load(dataset, &state)?, load_started.elapsed())
            }
        };

        let clock = self.quantum.start();
        let mut bindings = Vec::new();
        let halt = pipeline.run(&clock, self.max_page_results, &mut bindings);
        let quantum_used = clock.elapsed();

        let save_started = Instant::now();
        let next = match halt {
            Halt::Exhausted => None,
            Halt::Preempted | Halt::PageFull => {
                pipeline.stop();
                pipeline.save().map(|s| s.to_token())
            }
        };
        let save = if next.is_some() { save_started.elapsed() } else { Duration::ZERO };

        let stats = PageStats {
            quantum_used_ms: ms(quantum_used),
            preemption_overhead_ms: ms(load + save),
            load_ms: ms(load),
            save_ms: ms(save),
            queue_wait_ms: 0.0,
            cardinalities: pipeline.cardinalities(),
            started_us,
            finished_us: self.now_us(),
        };
        Ok(PageOfResults { bindings, next, stats })
    }
}
