use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::Context;
use bgp_client::{ClientConfig, ClientSession, Progress};
use bgp_core::Bgp;
use clap::{Parser, ValueEnum};
use serde_json::json;

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    /// One JSON object per binding set, then a stats line.
    Jsonl,
    /// Only the stats line.
    Stats,
}

/// Evaluate a BGP against a server, following continuation tokens.
#[derive(Parser)]
#[command(name = "client")]
struct Args {
    /// Server base URL, e.g. http://127.0.0.1:8000
    #[arg(long)]
    endpoint: String,
    /// BGP file: a JSON array of [s, p, o] triples or one `s p o .` per line.
    #[arg(long)]
    query: PathBuf,
    /// Give up after this many milliseconds (0 disables the deadline).
    #[arg(long, default_value_t = 120_000)]
    deadline_ms: u64,
    #[arg(long, value_enum, default_value = "jsonl")]
    output: Output,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let text = std::fs::read_to_string(&args.query).with_context(|| format!("reading {}", args.query.display()))?;
    let bgp = Bgp::parse(&text).with_context(|| format!("parsing {}", args.query.display()))?;

    let mut config = ClientConfig::new(&args.endpoint);
    config.deadline = (args.deadline_ms > 0).then(|| Duration::from_millis(args.deadline_ms));
    let mut session = ClientSession::new(config);
    session.start(bgp);

    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut written = 0;
    loop {
        let progress = session.step()?;
        if matches!(args.output, Output::Jsonl) {
            for mu in &session.execution().answers[written..] {
                serde_json::to_writer(&mut out, mu)?;
                out.write_all(b"\n")?;
            }
        }
        written = session.execution().answers.len();
        if progress != Progress::Continue {
            break;
        }
    }
    let done = session.into_execution();
    let stats = json!({
        "request_count": done.request_count,
        "elapsed_ms": done.elapsed.as_secs_f64() * 1000.0,
        "complete": done.complete,
        "answers": done.answers.len(),
    });
    serde_json::to_writer(&mut out, &stats)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
