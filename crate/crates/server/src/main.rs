use std::net::IpAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use bgp_core::{Dataset, Quantum};
use bgp_server::{ServerConfig, ServerHandle};
use clap::Parser;

/// Serve a dataset over the preemptive query protocol.
#[derive(Parser)]
#[command(name = "server")]
struct Args {
    /// N-Triples file to load.
    #[arg(long)]
    data: PathBuf,
    /// Time quantum in milliseconds, or "inf" to disable preemption.
    #[arg(long, default_value = "75")]
    quantum_ms: Quantum,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    #[arg(long, default_value_t = 8000)]
    port: u16,
    /// Cap on bindings per page (unlimited by default).
    #[arg(long)]
    max_page_results: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    queue_capacity: usize,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let started = Instant::now();
    let dataset = Dataset::load_path(&args.data).with_context(|| format!("loading {}", args.data.display()))?;
    log::info!(
        "loaded {} triples from {} in {:?} (digest {})",
        dataset.triple_count(),
        args.data.display(),
        started.elapsed(),
        dataset.digest()
    );
    let config = ServerConfig {
        quantum: args.quantum_ms,
        workers: args.workers,
        queue_capacity: args.queue_capacity,
        max_page_results: args.max_page_results,
        host: args.host,
        port: args.port,
    };
    let server = ServerHandle::start(&config, Arc::new(dataset))?;
    log::info!("quantum {}, {} worker(s), serving {}/sparql", config.quantum, config.workers, server.url());
    server.wait()?;
    Ok(())
}
