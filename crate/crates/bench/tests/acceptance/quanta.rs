use bgp_client::{ClientConfig, ClientSession};
use bgp_core::algebra::{PatternTerm, TriplePattern};
use bgp_core::engine::{run_quantum, run_to_completion, QuotaClock, SavedPlanState};
use bgp_core::{build_plan, Bgp, Dataset, Quantum, Term};
use bgp_server::{ServerConfig, ServerHandle};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use crate::fixtures::{bag, synthetic};
use crate::Verdict;

/// Every workload query through the HTTP server under several quanta.
pub fn completeness() -> Verdict {
    let s = synthetic();
    ensure!(s.workload.len() == 50, "workload has {} queries, expected 50", s.workload.len());
    let quanta = ["1", "10", "75", "inf"].map(|q| q.parse::<Quantum>().expect("valid quantum"));
    let mut requests = Vec::new();
    for quantum in quanta {
        let config = ServerConfig { quantum, ..ServerConfig::default() };
        let server = ServerHandle::start(&config, s.dataset.clone()).map_err(|e| e.to_string())?;
        let mut session = ClientSession::new(ClientConfig::new(server.url()));
        let mut total = 0;
        for (q, expected) in s.workload.queries.iter().zip(&s.expected) {
            let done = session.execute(q.bgp.clone()).map_err(|e| format!("{} at {quantum}: {e}", q.id))?;
            ensure!(done.complete, "{} at {quantum} did not complete", q.id);
            ensure!(
                bag(done.answers) == *expected,
                "{} at {quantum}: bag differs from the oracle ({} expected)",
                q.id,
                expected.len()
            );
            total += done.request_count;
        }
        server.shutdown();
        requests.push(format!("{quantum}: {total} requests"));
    }
    Ok(format!("50/50 queries equal the oracle under every quantum ({})", requests.join(", ")))
}

fn term(i: u8) -> Term {
    match i % 9 {
        7 => Term::literal(&format!("v{}", i % 3)),
        8 => Term::typed_literal(&format!("{}", i % 4), "http://www.w3.org/2001/XMLSchema#integer").unwrap(),
        n => Term::iri(format!("http://ex.org/n{n}")).unwrap(),
    }
}

fn predicate(i: u8) -> Term {
    Term::iri(format!("http://ex.org/p{}", i % 5)).unwrap()
}

fn triples(max: usize) -> impl Strategy<Value = Vec<[Term; 3]>> {
    prop::collection::vec((0u8..7, 0u8..5, 0u8..9), 0..=max)
        .prop_map(|v| v.into_iter().map(|(s, p, o)| [term(s), predicate(p), term(o)]).collect())
}

fn position(constant: impl Strategy<Value = Term>, var_weight: u32) -> impl Strategy<Value = PatternTerm> {
    prop_oneof![
        var_weight => (0u8..4).prop_map(|v| PatternTerm::var(["a", "b", "c", "d"][v as usize])),
        2 => constant.prop_map(PatternTerm::from),
    ]
}

fn pattern() -> impl Strategy<Value = TriplePattern> {
    (
        position((0u8..9).prop_map(term), 4),
        position((0u8..5).prop_map(predicate), 1),
        position((0u8..9).prop_map(term), 4),
    )
        .prop_map(|(s, p, o)| TriplePattern::new(s, p, o))
}

fn bgp() -> impl Strategy<Value = Bgp> {
    prop::collection::vec(pattern(), 1..=4).prop_map(|p| Bgp::new(p).expect("non-empty"))
}

/// Interrupting at a random point, saving, reloading from the wire token and
/// finishing gives the uninterrupted sequence.
pub fn save_load_fidelity() -> Verdict {
    // many random BGPs finish within a few steps, so run enough cases for
    // at least 1000 of them to be interrupted
    let cases = 4000;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let interrupted = std::cell::Cell::new(0usize);
    // small budgets dominate, so most cases stop before completion
    let checks = prop_oneof![1u64..10, 10u64..100, 100u64..2000];
    let result = runner.run(&(triples(500), bgp(), checks), |(triples, q, checks)| {
        let d = Dataset::from_triples(triples);
        let state = SavedPlanState::fresh(d.digest(), &build_plan(&d, &q));
        let expected = run_to_completion(&d, &state).unwrap();
        let first = run_quantum(&d, &state, &QuotaClock::after_checks(checks), None).unwrap();
        let mut got = first.results;
        if let Some(saved) = first.resume {
            interrupted.set(interrupted.get() + 1);
            let loaded = SavedPlanState::from_token(&saved.to_token()).unwrap();
            prop_assert_eq!(&loaded, &saved);
            got.extend(run_to_completion(&d, &loaded).unwrap());
        }
        prop_assert_eq!(got, expected);
        Ok(())
    });
    match result {
        Ok(()) if interrupted.get() >= 1000 => {
            Ok(format!("{cases} cases, {} interrupted before completion", interrupted.get()))
        }
        Ok(()) => Err(format!("only {} of {cases} cases were interrupted", interrupted.get())),
        Err(e) => Err(e.to_string()),
    }
}

/// Reading a pattern from offset k yields the matches from 0 without the
/// first k.
pub fn offset_scan_suffix() -> Verdict {
    let cases = 1000;
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let result = runner.run(&(triples(300), pattern(), 0usize..120), |(triples, tp, k)| {
        let d = Dataset::from_triples(triples);
        let all: Vec<_> = d.match_pattern(&tp, 0).collect();
        let suffix: Vec<_> = d.match_pattern(&tp, k).collect();
        prop_assert_eq!(suffix, all.into_iter().skip(k).collect::<Vec<_>>());
        Ok(())
    });
    result.map(|()| format!("{cases} (pattern, k) cases")).map_err(|e| e.to_string())
}
