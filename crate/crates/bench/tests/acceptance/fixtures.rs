use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use bgp_bench::experiment::measure_runtime;
use bgp_bench::{generate_workload, synth, Workload, WorkloadOptions};
use bgp_core::{Bgp, Dataset, SolutionMapping, Term};
use bgp_oracle::{sorted, Oracle};

pub const SEED: u64 = 7;

/// The seeded 10^5-triple dataset, its workload and the oracle's bags.
pub struct Synthetic {
    pub dataset: Arc<Dataset>,
    pub workload: Workload,
    pub expected: Vec<Vec<SolutionMapping>>,
}

pub fn synthetic() -> &'static Synthetic {
    static CELL: OnceLock<Synthetic> = OnceLock::new();
    CELL.get_or_init(|| {
        let dataset = Dataset::from_triples(synth::generate(SEED, 100_000));
        let oracle = Oracle::from_dataset(&dataset);
        let workload = generate_workload(SEED, &dataset, &oracle, &WorkloadOptions::new(50));
        let expected = workload.queries.iter().map(|q| oracle.evaluate(&q.bgp)).collect();
        Synthetic { dataset: Arc::new(dataset), workload, expected }
    })
}

pub fn bag(answers: Vec<SolutionMapping>) -> Vec<SolutionMapping> {
    sorted(answers)
}

const NS: &str = "http://fixture.example/";

fn iri(name: &str) -> Term {
    Term::iri(format!("{NS}{name}")).expect("valid iri")
}

/// Entries the inner pattern of every cartesian query scans per outer row.
const INNER: usize = 20_000;

/// `?a <outer> ?b . ?c <inner> ?c`. No inner triple is a self-loop, so the
/// query has no answers and costs `|outer| * INNER` index steps.
pub fn cartesian_query(outer: &str) -> Bgp {
    Bgp::parse(&format!("?a <{NS}{outer}> ?b .\n?c <{NS}inner> ?c .")).expect("valid query")
}

fn cartesian_dataset(outers: &BTreeMap<String, usize>) -> Dataset {
    let mut triples: Vec<[Term; 3]> =
        (0..INNER).map(|i| [iri(&format!("i{i}")), iri("inner"), iri(&format!("i{}", i + 1))]).collect();
    for (name, &size) in outers {
        triples.extend((0..size).map(|i| [iri(&format!("{name}-s{i}")), iri(name), iri(&format!("{name}-o{i}"))]));
    }
    Dataset::from_triples(triples)
}

fn idle_runtime(dataset: &Dataset, bgp: &Bgp) -> Duration {
    (0..3).map(|_| measure_runtime(dataset, bgp)).min().expect("three runs")
}

/// Queries whose idle runtimes approximate chosen targets.
pub struct Cartesian {
    pub dataset: Arc<Dataset>,
    pub queries: BTreeMap<String, (Bgp, Duration)>,
}

impl Cartesian {
    /// Sizes one outer predicate per target from the measured cost of an
    /// outer row, then corrects each size from its own measured runtime.
    pub fn calibrate(targets: &[(&str, Duration)]) -> Self {
        let probe = 400;
        let d = cartesian_dataset(&BTreeMap::from([("probe".to_owned(), probe)]));
        let per_row = idle_runtime(&d, &cartesian_query("probe")).as_secs_f64() / probe as f64;
        // an outer at least as large as the inner would be reordered
        let rows = |n: f64| (n.round().max(1.0) as usize).min(INNER - 1);
        let mut sizes: BTreeMap<String, usize> =
            targets.iter().map(|(name, target)| (name.to_string(), rows(target.as_secs_f64() / per_row))).collect();
        let mut fixture = Self::build(&sizes);
        for _ in 0..2 {
            for (name, target) in targets {
                let actual = fixture.runtime(name).as_secs_f64();
                let size = sizes.get_mut(*name).expect("sized");
                *size = rows(*size as f64 * target.as_secs_f64() / actual);
            }
            fixture = Self::build(&sizes);
        }
        fixture
    }

    fn build(sizes: &BTreeMap<String, usize>) -> Self {
        let dataset = cartesian_dataset(sizes);
        let queries = sizes
            .keys()
            .map(|name| {
                let bgp = cartesian_query(name);
                let runtime = idle_runtime(&dataset, &bgp);
                (name.clone(), (bgp, runtime))
            })
            .collect();
        Cartesian { dataset: Arc::new(dataset), queries }
    }

    pub fn query(&self, name: &str) -> &Bgp {
        &self.queries[name].0
    }

    pub fn runtime(&self, name: &str) -> Duration {
        self.queries[name].1
    }

    pub fn describe(&self) -> String {
        self.queries.iter().map(|(n, (_, r))| format!("{n}={:.0}ms", ms(*r))).collect::<Vec<_>>().join(" ")
    }
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}
