//! Picks a quantum long enough for a target fraction of queries to finish in
//! one request, then checks that preemption overhead stays small beside it.

use std::sync::Arc;
use std::time::{Duration, Instant};

use bgp_core::{Bgp, Dataset, Quantum};
use bgp_server::{QueryRequest, QueryService};
use serde::Serialize;

/// Overhead above this fraction of the quantum is rejected.
pub const MAX_OVERHEAD_RATIO: f64 = 0.1;

/// Source of the measurements the tuner needs.
pub trait RuntimeProbe {
    /// Idle single-run execution time of each query.
    fn runtimes(&mut self, queries: &[Bgp]) -> Vec<Duration>;
    /// Mean stop + save + load time per preempted or resumed request when
    /// the queries run with `quantum`.
    fn overhead(&mut self, queries: &[Bgp], quantum: Duration) -> Duration;
}

/// Measures an in-process engine with no HTTP in the way.
pub struct EngineProbe {
    dataset: Arc<Dataset>,
    /// Runs per query; the fastest is kept.
    pub runs: usize,
}

impl EngineProbe {
    pub fn new(dataset: Arc<Dataset>) -> Self {
        Self { dataset, runs: 3 }
    }
}

impl RuntimeProbe for EngineProbe {
    fn runtimes(&mut self, queries: &[Bgp]) -> Vec<Duration> {
        let service = QueryService::new(self.dataset.clone(), Quantum::Unlimited, None);
        queries
            .iter()
            .map(|q| {
                (0..self.runs.max(1))
                    .map(|_| {
                        let started = Instant::now();
                        service.execute(&QueryRequest::Query(q.clone())).expect("unlimited quantum completes");
                        started.elapsed()
                    })
                    .min()
                    .expect("at least one run")
            })
            .collect()
    }

    fn overhead(&mut self, queries: &[Bgp], quantum: Duration) -> Duration {
        let quantum = Quantum::finite(quantum.max(Duration::from_micros(1))).expect("positive quantum");
        let service = QueryService::new(self.dataset.clone(), quantum, None);
        let (mut total, mut pages) = (0.0, 0usize);
        for q in queries {
            let mut request = QueryRequest::Query(q.clone());
            loop {
                let page = service.execute(&request).expect("tokens from this service load");
                if page.stats.preemption_overhead_ms > 0.0 {
                    total += page.stats.preemption_overhead_ms;
                    pages += 1;
                }
                match page.next {
                    Some(token) => request = QueryRequest::Next(token),
                    None => break,
                }
            }
        }
        if pages == 0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(total / pages as f64 / 1000.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuneError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("target fraction {0} is outside (0, 1]")]
    InvalidTarget(f64),
    #[error("preemption overhead {overhead:?} is {:.1}% of quantum {quantum:?}, above {:.0}%", ratio * 100.0, MAX_OVERHEAD_RATIO * 100.0)]
    Overhead { quantum: Duration, overhead: Duration, ratio: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tuning {
    pub quantum_ms: f64,
    pub target_fraction: f64,
    pub overhead_ms: f64,
    pub overhead_ratio: f64,
    pub runtimes_ms: Vec<f64>,
}

impl Tuning {
    pub fn quantum(&self) -> Duration {
        Duration::from_secs_f64(self.quantum_ms / 1000.0)
    }
}

/// Smallest duration at least `target` of `runtimes` fit in: the
/// nearest-rank `target` percentile.
pub fn select_quantum(runtimes: &[Duration], target: f64) -> Duration {
    assert!(!runtimes.is_empty(), "no runtimes");
    let mut sorted = runtimes.to_vec();
    sorted.sort();
    let rank = ((target * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn tune_quantum(probe: &mut impl RuntimeProbe, queries: &[Bgp], target: f64) -> Result<Tuning, TuneError> {
    if queries.is_empty() {
        return Err(TuneError::EmptyWorkload);
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(TuneError::InvalidTarget(target));
    }
    let runtimes = probe.runtimes(queries);
    let quantum = select_quantum(&runtimes, target).max(Duration::from_micros(1));
    let overhead = probe.overhead(queries, quantum);
    let ratio = overhead.as_secs_f64() / quantum.as_secs_f64();
    if ratio >= MAX_OVERHEAD_RATIO {
        return Err(TuneError::Overhead { quantum, overhead, ratio });
    }
    let ms = |d: Duration| d.as_secs_f64() * 1000.0;
    Ok(Tuning {
        quantum_ms: ms(quantum),
        target_fraction: target,
        overhead_ms: ms(overhead),
        overhead_ratio: ratio,
        runtimes_ms: runtimes.into_iter().map(ms).collect(),
    })
}
