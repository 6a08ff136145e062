//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any failed. Numeric arguments select criteria, e.g.
//! `cargo test -p bgp-bench --test acceptance -- 3 4`.

/// Fails the criterion with a formatted reason unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

mod fixtures;
mod quanta;
mod recovery;
mod scheduling;
mod state_size;
mod tuning;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

/// Detail line on success, reason on failure.
pub type Verdict = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        number: 1,
        name: "quota-invariant completeness",
        budget: Duration::from_secs(600),
        run: quanta::completeness,
    },
    Criterion {
        number: 2,
        name: "save/load fidelity",
        budget: Duration::from_secs(300),
        run: quanta::save_load_fidelity,
    },
    Criterion {
        number: 3,
        name: "offset scan suffix",
        budget: Duration::from_secs(60),
        run: quanta::offset_scan_suffix,
    },
    Criterion {
        number: 4,
        name: "saved state size",
        budget: Duration::from_secs(300),
        run: state_size::affine_state_size,
    },
    Criterion {
        number: 5,
        name: "preemption overhead",
        budget: Duration::from_secs(300),
        run: scheduling::preemption_overhead,
    },
    Criterion { number: 6, name: "fairness", budget: Duration::from_secs(300), run: scheduling::fairness },
    Criterion {
        number: 7,
        name: "throughput crossover",
        budget: Duration::from_secs(600),
        run: scheduling::throughput_crossover,
    },
    Criterion { number: 8, name: "kill and restart", budget: Duration::from_secs(300), run: recovery::kill_restart },
    Criterion { number: 9, name: "single flight", budget: Duration::from_secs(300), run: recovery::single_flight },
    Criterion { number: 10, name: "quantum tuner", budget: Duration::from_secs(120), run: tuning::tuner_bounds },
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.number)) {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&*e))));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > c.budget => Err(format!("took {elapsed:.1?}, budget {:?}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} ({}): PASS in {elapsed:.1?}: {detail}", c.number, c.name),
            Err(reason) => {
                failed += 1;
                println!("criterion {} ({}): FAIL in {elapsed:.1?}: {reason}", c.number, c.name);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn panic_message(e: &(dyn std::any::Any + Send)) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}
