use std::sync::{Arc, OnceLock};
use std::thread;
use std::time::Duration;

use bgp_bench::experiment::Loaders;
use bgp_bench::{run_experiment, ExperimentConfig, Shape, Workload, WorkloadQuery};
use bgp_client::{ClientConfig, ClientSession};
use bgp_core::{Bgp, Quantum};
use bgp_server::{ServerConfig, ServerHandle};

use crate::fixtures::{mean, median, ms, Cartesian};
use crate::Verdict;

const BRIEF: [&str; 4] = ["brief0", "brief1", "brief2", "brief3"];

fn cartesian() -> &'static Cartesian {
    static CELL: OnceLock<Cartesian> = OnceLock::new();
    CELL.get_or_init(|| {
        let ms = Duration::from_millis;
        let mut targets: Vec<(&str, Duration)> = BRIEF.iter().map(|b| (*b, ms(10))).collect();
        targets.extend([("short", ms(40)), ("medium", ms(300)), ("long", ms(1000))]);
        Cartesian::calibrate(&targets)
    })
}

fn quantum_75() -> Quantum {
    Quantum::from_millis(75).expect("positive")
}

fn start(quantum: Quantum) -> Result<ServerHandle, String> {
    let config = ServerConfig { quantum, ..ServerConfig::default() };
    ServerHandle::start(&config, cartesian().dataset.clone()).map_err(|e| e.to_string())
}

/// Server-reported stop + save + load times of every page that paid any,
/// from `sessions` concurrent clients each running `bgp` `runs` times.
fn overhead_samples(endpoint: &str, bgp: &Bgp, sessions: usize, runs: usize) -> Result<Vec<f64>, String> {
    let threads: Vec<_> = (0..sessions)
        .map(|_| {
            let (endpoint, bgp) = (endpoint.to_owned(), bgp.clone());
            thread::spawn(move || -> Result<Vec<f64>, String> {
                let mut session = ClientSession::new(ClientConfig::new(endpoint));
                let mut out = Vec::new();
                for _ in 0..runs {
                    let done = session.execute(bgp.clone()).map_err(|e| e.to_string())?;
                    if !done.complete {
                        return Err("query timed out".into());
                    }
                    out.extend(done.pages.iter().map(|p| p.preemption_overhead_ms).filter(|o| *o > 0.0));
                }
                Ok(out)
            })
        })
        .collect();
    let mut all = Vec::new();
    for t in threads {
        all.extend(t.join().map_err(|_| "client thread panicked".to_owned())??);
    }
    if all.is_empty() {
        return Err("no request was preempted or resumed".into());
    }
    Ok(all)
}

pub fn preemption_overhead() -> Verdict {
    let f = cartesian();
    let quantum = 75.0;
    let server = start(quantum_75())?;
    let one = overhead_samples(&server.url(), f.query("medium"), 1, 5)?;
    let twenty = overhead_samples(&server.url(), f.query("medium"), 20, 1)?;
    server.shutdown();
    let (m1, m20) = (mean(&one), mean(&twenty));
    ensure!(m1 < 0.1 * quantum, "mean overhead {m1:.3} ms with 1 client is not below 10% of {quantum} ms");
    ensure!(m20 < 0.1 * quantum, "mean overhead {m20:.3} ms with 20 clients is not below 10% of {quantum} ms");
    ensure!(m20 <= 2.0 * m1, "mean overhead grew from {m1:.4} ms to {m20:.4} ms between 1 and 20 clients");
    let stretch = if m1.max(m20) < 0.01 * quantum { "met" } else { "missed" };
    Ok(format!(
        "mean {m1:.4} ms over {} requests with 1 client, {m20:.4} ms over {} with 20 ({:.3}% of the quantum, 1% stretch {stretch})",
        one.len(),
        twenty.len(),
        100.0 * m1.max(m20) / quantum
    ))
}

/// Latency of the short query while ten loaders replay the long one.
fn loaded_latency(quantum: Quantum, samples: usize) -> Result<Vec<Duration>, String> {
    let f = cartesian();
    let server = start(quantum)?;
    let loaders = Loaders::start(&server.url(), &[f.query("long").clone()], 10, None);
    thread::sleep(Duration::from_millis(500));
    let mut session = ClientSession::new(ClientConfig::new(server.url()));
    let mut latencies = Vec::new();
    for _ in 0..samples {
        let done = session.execute(f.query("short").clone());
        match done {
            Ok(done) if done.complete => latencies.push(done.elapsed),
            Ok(_) => return Err(format!("short query timed out at {quantum}")),
            Err(e) => return Err(e.to_string()),
        }
    }
    // kill first, so loaders do not wait out their long quanta
    server.kill();
    loaders.stop();
    Ok(latencies)
}

pub fn fairness() -> Verdict {
    let f = cartesian();
    let server = start(quantum_75())?;
    let mut session = ClientSession::new(ClientConfig::new(server.url()));
    let mut idle = Vec::new();
    for _ in 0..5 {
        let done = session.execute(f.query("short").clone()).map_err(|e| e.to_string())?;
        ensure!(
            done.request_count == 1,
            "short query needed {} requests when idle ({})",
            done.request_count,
            f.describe()
        );
        idle.push(done.elapsed);
    }
    server.shutdown();
    let idle = median(idle);
    let bound = idle * 30;
    let preemptive = median(loaded_latency(quantum_75(), 5)?);
    let unlimited = median(loaded_latency(Quantum::Unlimited, 1)?);
    let ratio = |d: Duration| d.as_secs_f64() / idle.as_secs_f64();
    let detail = format!(
        "idle {:.1} ms ({}), loaded {:.0} ms at 75 ms ({:.1}x) and {:.0} ms unbounded ({:.1}x)",
        ms(idle),
        f.describe(),
        ms(preemptive),
        ratio(preemptive),
        ms(unlimited),
        ratio(unlimited)
    );
    ensure!(preemptive < bound, "not within 30x at 75 ms: {detail}");
    ensure!(unlimited > bound, "unbounded quantum stayed within 30x: {detail}");
    Ok(detail)
}

pub fn throughput_crossover() -> Verdict {
    let f = cartesian();
    let mut names: Vec<&str> = BRIEF.to_vec();
    names.push("medium");
    let queries: Vec<WorkloadQuery> = names
        .iter()
        .map(|n| WorkloadQuery { id: n.to_string(), shape: Shape::Star, bgp: f.query(n).clone(), expected_answers: 0 })
        .collect();
    let runtimes: Vec<Duration> = names.iter().map(|n| f.runtime(n)).collect();
    let workload = Workload { seed: 0, dataset_digest: f.dataset.digest().to_owned(), queries, skipped: vec![] };
    let clients = 16;
    let mut throughput = Vec::new();
    for quantum in [quantum_75(), Quantum::Unlimited] {
        let mut config = ExperimentConfig::new(clients, quantum);
        config.repetitions = 1;
        config.warmup = Duration::from_millis(300);
        let report =
            run_experiment(Arc::clone(&f.dataset), &workload, &runtimes, &config).map_err(|e| e.to_string())?;
        ensure!(report.metrics.timeout_ratio == 0.0, "measurement queries timed out at {quantum}");
        throughput.push(report.metrics.throughput_qph);
    }
    let (pre, inf) = (throughput[0], throughput[1]);
    let detail = format!("{clients} clients: {pre:.0} q/h at 75 ms, {inf:.0} q/h unbounded");
    ensure!(pre > inf, "no crossover: {detail}");
    Ok(detail)
}
