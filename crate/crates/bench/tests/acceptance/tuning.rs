use std::time::Duration;

use bgp_bench::{tune_quantum, RuntimeProbe};
use bgp_core::Bgp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Verdict;

/// A workload whose runtimes and overhead are known in advance.
struct Fixture {
    runtimes: Vec<Duration>,
    overhead: Duration,
}

impl RuntimeProbe for Fixture {
    fn runtimes(&mut self, _: &[Bgp]) -> Vec<Duration> {
        self.runtimes.clone()
    }

    fn overhead(&mut self, _: &[Bgp], _: Duration) -> Duration {
        self.overhead
    }
}

/// Smallest runtime that at least 80% of the runtimes do not exceed.
fn p80(runtimes: &[Duration]) -> Duration {
    let mut sorted = runtimes.to_vec();
    sorted.sort();
    *sorted.iter().find(|&&t| runtimes.iter().filter(|&&r| r <= t).count() * 5 >= runtimes.len() * 4).unwrap()
}

pub fn tuner_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let fixtures = 500;
    let query = Bgp::parse("?s ?p ?o .").expect("valid query");
    for i in 0..fixtures {
        let n = rng.gen_range(1..200);
        let runtimes: Vec<Duration> = (0..n)
            .map(|_| {
                // log-uniform between 10 us and 10 s, with frequent ties
                let micros = 10f64 * 1e6f64.powf(rng.gen::<f64>());
                Duration::from_micros(if rng.gen_bool(0.2) { 5_000 } else { micros as u64 })
            })
            .collect();
        let t = p80(&runtimes);
        let mut probe = Fixture { runtimes, overhead: t / 1000 };
        let queries = vec![query.clone(); n];
        let tuning = tune_quantum(&mut probe, &queries, 0.8).map_err(|e| format!("fixture {i}: {e}"))?;
        let q = tuning.quantum();
        ensure!(
            q >= t && q.as_secs_f64() <= 1.2 * t.as_secs_f64(),
            "fixture {i}: quantum {q:?} outside [{t:?}, 1.2 x {t:?}]"
        );
    }
    Ok(format!("{fixtures} fixtures, every quantum within [T, 1.2T]"))
}
