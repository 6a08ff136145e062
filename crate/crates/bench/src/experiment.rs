use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use bgp_client::{ClientConfig, ClientSession};
use bgp_core::engine::run_to_completion;
use bgp_core::{build_plan, Bgp, Dataset, Quantum, SavedPlanState};
use bgp_server::{Health, ServerConfig, ServerHandle};
use serde::{Deserialize, Serialize};

use crate::metrics::{QueryRecord, WorkloadMetrics};
use crate::workload::{Workload, WorkloadQuery};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("could not start server: {0}")]
    Start(#[from] std::io::Error),
    #[error("server at {endpoint} is unreachable: {message}")]
    Unreachable { endpoint: String, message: String },
    #[error("server at {endpoint} serves dataset {found}, expected {expected}")]
    WrongDataset { endpoint: String, expected: String, found: String },
    #[error("query {query} failed: {message}")]
    Query { query: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Loaders plus the measurement client.
    pub clients: usize,
    #[serde(with = "quantum_ms")]
    pub quantum: Quantum,
    pub workers: usize,
    /// Per-query client deadline.
    pub deadline: Duration,
    pub repetitions: usize,
    /// Fixed delay before every request.
    pub latency: Option<Duration>,
    /// Fraction of the workload, by measured runtime, run by the loaders.
    pub complex_fraction: f64,
    /// Time given to loaders to fill the queue before measuring.
    pub warmup: Duration,
}

impl ExperimentConfig {
    pub fn new(clients: usize, quantum: Quantum) -> Self {
        Self {
            clients,
            quantum,
            workers: 1,
            deadline: Duration::from_secs(120),
            repetitions: 3,
            latency: None,
            complex_fraction: 0.2,
            warmup: Duration::from_millis(200),
        }
    }
}

mod quantum_ms {
    use bgp_core::Quantum;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Quantum, s: S) -> Result<S::Ok, S::Error> {
        match q.duration() {
            Some(d) => s.serialize_f64(d.as_secs_f64() * 1000.0),
            None => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Quantum, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Ms(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Ms(ms) => ms.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: WorkloadMetrics,
    pub rows: Vec<QueryRecord>,
    /// Queries the loaders completed while the measurement ran.
    pub loader_queries: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub dataset_digest: String,
    pub triple_count: usize,
    /// Ids of the queries replayed by the loaders.
    pub loader_query_ids: Vec<String>,
    /// Scalar metrics averaged over repetitions.
    pub metrics: WorkloadMetrics,
    pub runs: Vec<RunReport>,
}

/// Single-run execution time of `bgp` on an idle in-process engine.
pub fn measure_runtime(dataset: &Dataset, bgp: &Bgp) -> Duration {
    let started = Instant::now();
    let state = SavedPlanState::fresh(dataset.digest(), &build_plan(dataset, bgp));
    run_to_completion(dataset, &state).expect("fresh state loads");
    started.elapsed()
}

/// Indices of the `fraction` most expensive queries, most expensive first.
pub fn most_expensive(runtimes: &[Duration], fraction: f64) -> Vec<usize> {
    let k = ((runtimes.len() as f64 * fraction).ceil() as usize).clamp(1, runtimes.len().max(1));
    let mut order: Vec<usize> = (0..runtimes.len()).collect();
    order.sort_by(|&a, &b| runtimes[b].cmp(&runtimes[a]).then(a.cmp(&b)));
    order.truncate(k.min(runtimes.len()));
    order
}

pub fn check_health(endpoint: &str, expected_digest: &str) -> Result<Health, ExperimentError> {
    let unreachable = |message: String| ExperimentError::Unreachable { endpoint: endpoint.to_owned(), message };
    let health: Health = ureq_get(&format!("{endpoint}/health")).map_err(unreachable)?;
    if health.digest != expected_digest {
        return Err(ExperimentError::WrongDataset {
            endpoint: endpoint.to_owned(),
            expected: expected_digest.to_owned(),
            found: health.digest,
        });
    }
    Ok(health)
}

fn ureq_get(url: &str) -> Result<Health, String> {
    let agent: bgp_client::Agent = bgp_client::agent();
    let mut resp = agent.get(url).call().map_err(|e| e.to_string())?;
    if resp.status().as_u16() != 200 {
        return Err(format!("status {}", resp.status()));
    }
    resp.body_mut().read_json().map_err(|e| e.to_string())
}

/// Runs every workload query once, in order, with one session.
pub fn run_measurement(
    endpoint: &str,
    queries: &[WorkloadQuery],
    deadline: Duration,
    latency: Option<Duration>,
) -> Result<(Vec<QueryRecord>, Duration), ExperimentError> {
    let mut config = ClientConfig::new(endpoint);
    config.deadline = Some(deadline);
    config.latency = latency;
    let mut session = ClientSession::new(config);
    let started = Instant::now();
    let mut rows = Vec::with_capacity(queries.len());
    for q in queries {
        let done = session
            .execute(q.bgp.clone())
            .map_err(|e| ExperimentError::Query { query: q.id.clone(), message: e.to_string() })?;
        let overhead_pages = done.pages.iter().filter(|p| p.preemption_overhead_ms > 0.0).count();
        rows.push(QueryRecord {
            query_id: q.id.clone(),
            shape: Some(q.shape),
            elapsed_ms: done.elapsed.as_secs_f64() * 1000.0,
            requests: done.request_count,
            answers: done.answers.len(),
            expected_answers: Some(q.expected_answers),
            complete: done.complete,
            overhead_ms: done.pages.iter().map(|p| p.preemption_overhead_ms).sum(),
            overhead_pages,
        });
    }
    Ok((rows, started.elapsed()))
}

/// Loader sessions that replay `queries` until stopped.
pub struct Loaders {
    stop: Arc<AtomicBool>,
    completed: Arc<AtomicUsize>,
    threads: Vec<thread::JoinHandle<()>>,
}

impl Loaders {
    pub fn start(endpoint: &str, queries: &[Bgp], count: usize, latency: Option<Duration>) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let completed = Arc::new(AtomicUsize::new(0));
        let threads = (0..count)
            .map(|i| {
                let mut config = ClientConfig::new(endpoint);
                config.deadline = None;
                config.latency = latency;
                config.cancel = Some(stop.clone());
                let queries = queries.to_vec();
                let (stop, completed) = (stop.clone(), completed.clone());
                thread::spawn(move || {
                    let mut session = ClientSession::new(config);
                    for q in queries.iter().cycle().skip(i) {
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                        match session.execute(q.clone()) {
                            Ok(done) if done.complete => {
                                completed.fetch_add(1, Ordering::Relaxed);
                            }
                            Ok(_) => {}
                            Err(e) => log::warn!("loader {i}: {e}"),
                        }
                    }
                })
            })
            .collect();
        Self { stop, completed, threads }
    }

    /// Stops every loader after its current request and returns the number
    /// of queries they completed.
    pub fn stop(self) -> usize {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads {
            let _ = t.join();
        }
        self.completed.load(Ordering::Relaxed)
    }
}

/// Starts an in-process server per repetition, runs `clients - 1` loaders on
/// the most expensive queries and measures the full workload with one more
/// client.
pub fn run_experiment(
    dataset: Arc<Dataset>,
    workload: &Workload,
    runtimes: &[Duration],
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    assert!(config.clients >= 1 && config.repetitions >= 1);
    assert_eq!(runtimes.len(), workload.len());
    let complex = most_expensive(runtimes, config.complex_fraction);
    let loader_queries: Vec<Bgp> = complex.iter().map(|&i| workload.queries[i].bgp.clone()).collect();
    let server_config = ServerConfig { quantum: config.quantum, workers: config.workers, ..ServerConfig::default() };

    let mut runs = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let server = ServerHandle::start(&server_config, dataset.clone())?;
        let endpoint = server.url();
        check_health(&endpoint, dataset.digest())?;
        let loaders = Loaders::start(&endpoint, &loader_queries, config.clients - 1, config.latency);
        if config.clients > 1 {
            thread::sleep(config.warmup);
        }
        let measured = run_measurement(&endpoint, &workload.queries, config.deadline, config.latency);
        let loader_queries = loaders.stop();
        server.shutdown();
        let (rows, elapsed) = measured?;
        log::info!("repetition {rep}: {} queries in {elapsed:?}", rows.len());
        runs.push(RunReport { metrics: WorkloadMetrics::compute(&rows, elapsed), rows, loader_queries });
    }
    let metrics = WorkloadMetrics::mean(&runs.iter().map(|r| r.metrics.clone()).collect::<Vec<_>>());
    Ok(ExperimentReport {
        config: config.clone(),
        dataset_digest: dataset.digest().to_owned(),
        triple_count: dataset.triple_count(),
        loader_query_ids: complex.iter().map(|&i| workload.queries[i].id.clone()).collect(),
        metrics,
        runs,
    })
}
