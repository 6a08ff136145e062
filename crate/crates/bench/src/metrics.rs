use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::workload::Shape;

/// Outcome of one query run by the measurement client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub shape: Option<Shape>,
    pub elapsed_ms: f64,
    pub requests: usize,
    pub answers: usize,
    pub expected_answers: Option<usize>,
    pub complete: bool,
    /// Sum of server-reported stop, save and load time over all pages.
    pub overhead_ms: f64,
    /// Pages that paid any of that overhead.
    pub overhead_pages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadMetrics {
    pub queries: usize,
    /// Fraction of queries that did not complete before the client deadline.
    pub timeout_ratio: f64,
    /// Queries per hour, timed-out queries included.
    pub throughput_qph: f64,
    /// Mean stop + save + load time per preempted or resumed request.
    pub avg_overhead_ms: f64,
    /// Number of queries per HTTP request count.
    pub http_requests_per_query: BTreeMap<usize, usize>,
    /// Mean fraction of the expected answers received.
    pub completeness: f64,
    pub total_elapsed_ms: f64,
}

impl WorkloadMetrics {
    /// Computes the metrics of one run from its records alone.
    pub fn compute(records: &[QueryRecord], total_elapsed: Duration) -> Self {
        let n = records.len();
        let mut histogram = BTreeMap::new();
        for r in records {
            *histogram.entry(r.requests).or_insert(0) += 1;
        }
        let overhead: f64 = records.iter().map(|r| r.overhead_ms).sum();
        let overhead_pages: usize = records.iter().map(|r| r.overhead_pages).sum();
        let completeness = if n == 0 {
            1.0
        } else {
            records
                .iter()
                .map(|r| match r.expected_answers {
                    Some(0) | None => f64::from(u8::from(r.complete)),
                    Some(e) => (r.answers as f64 / e as f64).min(1.0),
                })
                .sum::<f64>()
                / n as f64
        };
        let hours = total_elapsed.as_secs_f64() / 3600.0;
        WorkloadMetrics {
            queries: n,
            timeout_ratio: if n == 0 { 0.0 } else { records.iter().filter(|r| !r.complete).count() as f64 / n as f64 },
            throughput_qph: if hours > 0.0 { n as f64 / hours } else { 0.0 },
            avg_overhead_ms: if overhead_pages == 0 { 0.0 } else { overhead / overhead_pages as f64 },
            http_requests_per_query: histogram,
            completeness,
            total_elapsed_ms: total_elapsed.as_secs_f64() * 1000.0,
        }
    }

    /// Averages scalar metrics over repetitions and sums the histograms.
    pub fn mean(runs: &[WorkloadMetrics]) -> Self {
        assert!(!runs.is_empty(), "no runs to average");
        let k = runs.len() as f64;
        let avg = |f: fn(&WorkloadMetrics) -> f64| runs.iter().map(f).sum::<f64>() / k;
        let mut histogram = BTreeMap::new();
        for run in runs {
            for (requests, count) in &run.http_requests_per_query {
                *histogram.entry(*requests).or_insert(0) += count;
            }
        }
        WorkloadMetrics {
            queries: runs[0].queries,
            timeout_ratio: avg(|m| m.timeout_ratio),
            throughput_qph: avg(|m| m.throughput_qph),
            avg_overhead_ms: avg(|m| m.avg_overhead_ms),
            http_requests_per_query: histogram,
            completeness: avg(|m| m.completeness),
            total_elapsed_ms: avg(|m| m.total_elapsed_ms),
        }
    }
}
