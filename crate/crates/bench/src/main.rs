use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use bgp_bench::experiment::measure_runtime;
use bgp_bench::{
    generate_workload, run_experiment, synth, tune_quantum, EngineProbe, ExperimentConfig, Workload, WorkloadOptions,
};
use bgp_core::{Dataset, Quantum};
use bgp_oracle::Oracle;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bench", about = "Benchmark harness for the preemptive BGP server")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// N-Triples file; a synthetic dataset is generated when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Size of the synthetic dataset.
    #[arg(long, default_value_t = 100_000)]
    triples: usize,
    /// Seed of the synthetic dataset.
    #[arg(long, default_value_t = 1)]
    data_seed: u64,
}

impl DataArgs {
    fn load(&self) -> anyhow::Result<Dataset> {
        match &self.data {
            Some(path) => Dataset::load_path(path).with_context(|| format!("loading {}", path.display())),
            None => Ok(Dataset::from_triples(synth::generate(self.data_seed, self.triples))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as N-Triples.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        triples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a workload of star, path and snowflake queries.
    Workload {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        queries: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run loaders plus a measurement client against an in-process server.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1)]
        clients: usize,
        /// Milliseconds, or "inf".
        #[arg(long, default_value = "75")]
        quantum_ms: Quantum,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Workload seed, used when no workload file is given.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        workload: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        queries: usize,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 120_000)]
        deadline_ms: u64,
        /// Delay before every request, emulating network latency.
        #[arg(long)]
        latency_ms: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the quantum that lets a target fraction of queries finish in one.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        workload: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        target: f64,
    },
}

fn workload_for(dataset: &Dataset, path: Option<&PathBuf>, seed: u64, queries: usize) -> anyhow::Result<Workload> {
    let workload = match path {
        Some(path) => Workload::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => generate_workload(seed, dataset, &Oracle::from_dataset(dataset), &WorkloadOptions::new(queries)),
    };
    if workload.dataset_digest != dataset.digest() {
        bail!("workload was generated for dataset {}, not {}", workload.dataset_digest, dataset.digest());
    }
    for s in &workload.skipped {
        log::warn!("skipped a {} query: {}", s.shape, s.reason);
    }
    Ok(workload)
}

fn write_json(path: &PathBuf, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate { seed, triples, out } => {
            let triples = synth::generate(seed, triples);
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            synth::write_ntriples(&triples, BufWriter::new(file))?;
            log::info!("wrote {} triples to {}", triples.len(), out.display());
        }
        Command::Workload { data, seed, queries, out } => {
            let dataset = data.load()?;
            let workload = workload_for(&dataset, None, seed, queries)?;
            workload.save(&out)?;
            log::info!("wrote {} queries to {}", workload.len(), out.display());
        }
        Command::Run {
            data,
            clients,
            quantum_ms,
            workers,
            seed,
            workload,
            queries,
            repetitions,
            deadline_ms,
            latency_ms,
            out,
        } => {
            if clients == 0 || repetitions == 0 {
                bail!("--clients and --repetitions must be positive");
            }
            let dataset = Arc::new(data.load()?);
            let workload = workload_for(&dataset, workload.as_ref(), seed, queries)?;
            let runtimes: Vec<Duration> = workload.queries.iter().map(|q| measure_runtime(&dataset, &q.bgp)).collect();
            let mut config = ExperimentConfig::new(clients, quantum_ms);
            config.workers = workers;
            config.repetitions = repetitions;
            config.deadline = Duration::from_millis(deadline_ms);
            config.latency = latency_ms.map(Duration::from_millis);
            let report = run_experiment(dataset, &workload, &runtimes, &config)?;
            write_json(&out, &report)?;
            let m = &report.metrics;
            log::info!(
                "throughput {:.0} q/h, timeouts {:.1}%, overhead {:.3} ms, completeness {:.3}",
                m.throughput_qph,
                m.timeout_ratio * 100.0,
                m.avg_overhead_ms,
                m.completeness
            );
        }
        Command::Tune { data, workload, target } => {
            let dataset = Arc::new(data.load()?);
            let workload = workload_for(&dataset, Some(&workload), 0, 0)?;
            let tuning = tune_quantum(&mut EngineProbe::new(dataset), &workload.bgps(), target)?;
            println!("{}", serde_json::to_string_pretty(&tuning)?);
        }
    }
    Ok(())
}
