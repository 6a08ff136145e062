use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use bgp_bench::experiment::measure_runtime;
use bgp_client::{ClientConfig, ClientSession, Execution, Outcome, Progress};
use bgp_core::{Bgp, Quantum};
use bgp_server::{ServerConfig, ServerHandle};

use crate::fixtures::{bag, synthetic};
use crate::Verdict;

/// Indices of the `n` workload queries with the most answers.
fn heaviest(n: usize) -> Vec<usize> {
    let s = synthetic();
    let mut order: Vec<usize> = (0..s.workload.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(s.expected[i].len()));
    order.truncate(n);
    order
}

struct Case {
    query: usize,
    kill_after_pages: usize,
    jitter: Duration,
    restart_delay: Duration,
}

fn scripted_cases() -> Vec<Case> {
    let queries = heaviest(20);
    (0..20)
        .map(|i| Case {
            query: queries[i],
            kill_after_pages: 1 + i % 4,
            jitter: Duration::from_micros(700 * (i % 3) as u64),
            restart_delay: Duration::from_millis([0, 20, 100, 300][i % 4]),
        })
        .collect()
}

/// Steps `bgp` to completion on its own thread, publishing the page count.
fn spawn_client(
    endpoint: String,
    bgp: Bgp,
    pages: Arc<AtomicUsize>,
    done: Arc<AtomicBool>,
) -> thread::JoinHandle<Result<Execution, String>> {
    thread::spawn(move || {
        let mut config = ClientConfig::new(endpoint);
        config.deadline = Some(Duration::from_secs(60));
        let mut session = ClientSession::new(config);
        session.start(bgp);
        let result = loop {
            match session.step() {
                Ok(Progress::Continue) => {
                    pages.fetch_add(1, Ordering::SeqCst);
                }
                Ok(Progress::Complete) => break Ok(()),
                Ok(Progress::Stopped) => break Err("deadline passed".to_owned()),
                Err(e) => break Err(e.to_string()),
            }
        };
        done.store(true, Ordering::SeqCst);
        result.map(|()| session.into_execution())
    })
}

fn run_case(case: &Case, config: &ServerConfig) -> Result<(), String> {
    let s = synthetic();
    let q = &s.workload.queries[case.query];
    let server = ServerHandle::start(config, s.dataset.clone()).map_err(|e| e.to_string())?;
    let restart_config = ServerConfig { port: server.addr().port(), ..config.clone() };
    let (pages, done) = (Arc::new(AtomicUsize::new(0)), Arc::new(AtomicBool::new(false)));
    let client = spawn_client(server.url(), q.bgp.clone(), pages.clone(), done.clone());
    while pages.load(Ordering::SeqCst) < case.kill_after_pages && !done.load(Ordering::SeqCst) {
        thread::sleep(Duration::from_micros(100));
    }
    thread::sleep(case.jitter);
    if done.load(Ordering::SeqCst) {
        let _ = client.join();
        return Err(format!("{} finished before the kill", q.id));
    }
    server.kill();
    thread::sleep(case.restart_delay);
    let restarted = ServerHandle::start(&restart_config, s.dataset.clone()).map_err(|e| e.to_string())?;
    let execution = client.join().map_err(|_| "client panicked".to_owned())??;
    restarted.shutdown();
    let failed = execution.requests.iter().filter(|r| r.outcome != Outcome::Page).count();
    ensure!(execution.complete, "{} did not complete", q.id);
    ensure!(failed > 0, "{}: no request failed, so the kill was not observed", q.id);
    ensure!(bag(execution.answers) == s.expected[case.query], "{}: bag differs from the oracle", q.id);
    Ok(())
}

pub fn kill_restart() -> Verdict {
    let config = ServerConfig {
        quantum: Quantum::from_millis(1).expect("positive"),
        max_page_results: Some(100),
        ..ServerConfig::default()
    };
    let cases = scripted_cases();
    let mut failures = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        if let Err(e) = run_case(case, &config) {
            failures.push(format!("case {i}: {e}"));
        }
    }
    let passed = cases.len() - failures.len();
    ensure!(failures.is_empty(), "{passed}/{} cases passed; {}", cases.len(), failures.join("; "));
    Ok(format!("{passed}/{} scripted kill/restart cases equal the oracle", cases.len()))
}

fn sequential(execution: &Execution) -> Result<(), String> {
    for pair in execution.requests.windows(2) {
        ensure!(pair[0].finished <= pair[1].started, "requests overlap: {:?} then {:?}", pair[0], pair[1]);
    }
    for pair in execution.pages.windows(2) {
        ensure!(
            pair[0].finished_us <= pair[1].started_us,
            "server processed pages concurrently: {}..{} and {}..{} us",
            pair[0].started_us,
            pair[0].finished_us,
            pair[1].started_us,
            pair[1].finished_us
        );
    }
    Ok(())
}

pub fn single_flight() -> Verdict {
    let s = synthetic();

    // concurrent sessions on a tiny queue, so some requests are retried
    let config = ServerConfig {
        quantum: Quantum::from_millis(1).expect("positive"),
        queue_capacity: 2,
        max_page_results: Some(100),
        ..ServerConfig::default()
    };
    let server = ServerHandle::start(&config, s.dataset.clone()).map_err(|e| e.to_string())?;
    let threads: Vec<_> = heaviest(8)
        .into_iter()
        .map(|i| {
            let (endpoint, bgp) = (server.url(), s.workload.queries[i].bgp.clone());
            thread::spawn(move || ClientSession::new(ClientConfig::new(endpoint)).execute(bgp))
        })
        .collect();
    let (mut requests, mut retried) = (0, 0);
    for t in threads {
        let execution = t.join().map_err(|_| "client panicked".to_owned())?.map_err(|e| e.to_string())?;
        ensure!(execution.complete, "a loaded session did not complete");
        sequential(&execution)?;
        requests += execution.request_count;
        retried += execution.requests.iter().filter(|r| r.outcome != Outcome::Page).count();
    }
    server.shutdown();

    // queries that fit in one quantum take one request
    let quantum = Duration::from_millis(75);
    let server = ServerHandle::start(
        &ServerConfig { quantum: Quantum::finite(quantum).expect("positive"), ..ServerConfig::default() },
        s.dataset.clone(),
    )
    .map_err(|e| e.to_string())?;
    let mut session = ClientSession::new(ClientConfig::new(server.url()));
    let mut single = 0;
    for q in &s.workload.queries {
        if measure_runtime(&s.dataset, &q.bgp) * 3 > quantum {
            continue;
        }
        let started = Instant::now();
        let execution = session.execute(q.bgp.clone()).map_err(|e| e.to_string())?;
        ensure!(
            execution.request_count == 1 && execution.pages.len() == 1,
            "{} used {} requests in {:?}",
            q.id,
            execution.request_count,
            started.elapsed()
        );
        single += 1;
    }
    server.shutdown();
    ensure!(single > 0, "no workload query fits in one quantum");
    Ok(format!(
        "8 concurrent sessions made {requests} requests ({retried} rejected and retried) with no overlap; \
         {single} one-quantum queries used exactly 1 request each"
    ))
}
