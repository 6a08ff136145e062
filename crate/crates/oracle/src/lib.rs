//! Reference BGP evaluator used to check the engine.
//!
//! It shares nothing with the engine's evaluation path: every pattern is
//! answered by a full scan over the raw term triples, and patterns are joined
//! in BGP order with hash joins on their shared variables. Results are
//! returned sorted so bags can be compared directly.

use std::collections::{BTreeSet, HashMap};

use bgp_core::algebra::{Bgp, SolutionMapping, TriplePattern, Variable};
use bgp_core::{Dataset, Term};

pub struct Oracle {
    triples: Vec<[Term; 3]>,
}

impl Oracle {
    pub fn new(triples: impl IntoIterator<Item = [Term; 3]>) -> Self {
        let set: BTreeSet<[Term; 3]> = triples.into_iter().collect();
        Self { triples: set.into_iter().collect() }
    }

    pub fn from_dataset(dataset: &Dataset) -> Self {
        Self::new(dataset.triples().map(|t| dataset.decode(t).map(Clone::clone)))
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// Solutions of a single pattern, by full scan.
    pub fn pattern_solutions(&self, tp: &TriplePattern) -> Vec<SolutionMapping> {
        let empty = SolutionMapping::new();
        self.triples.iter().filter_map(|[s, p, o]| empty.try_extend(tp, [s, p, o])).collect()
    }

    /// Sorted answer bag of `bgp`.
    pub fn evaluate(&self, bgp: &Bgp) -> Vec<SolutionMapping> {
        self.evaluate_bounded(bgp, usize::MAX).expect("unbounded evaluation")
    }

    /// Like [`evaluate`](Self::evaluate) but gives up (returns `None`) as soon
    /// as any intermediate or final result exceeds `limit` mappings.
    pub fn evaluate_bounded(&self, bgp: &Bgp, limit: usize) -> Option<Vec<SolutionMapping>> {
        let mut acc: Vec<SolutionMapping> = vec![SolutionMapping::new()];
        let mut acc_vars: BTreeSet<Variable> = BTreeSet::new();
        for tp in bgp.patterns() {
            let right = self.pattern_solutions(tp);
            if right.len() > limit {
                return None;
            }
            let right_vars: BTreeSet<Variable> = tp.variables().into_iter().cloned().collect();
            let shared: Vec<&Variable> = acc_vars.intersection(&right_vars).collect();
            let key = |mu: &SolutionMapping| -> Vec<Term> {
                shared.iter().map(|v| mu.get(v).expect("shared variable bound").clone()).collect()
            };
            let mut table: HashMap<Vec<Term>, Vec<&SolutionMapping>> = HashMap::new();
            for mu in &right {
                table.entry(key(mu)).or_default().push(mu);
            }
            let mut next = Vec::new();
            for left in &acc {
                let Some(matches) = table.get(&key(left)) else { continue };
                for right in matches {
                    let mut merged = left.clone();
                    for (v, t) in right.iter() {
                        merged.bind(v.clone(), t.clone());
                    }
                    next.push(merged);
                    if next.len() > limit {
                        return None;
                    }
                }
            }
            acc = next;
            acc_vars.extend(right_vars);
        }
        acc.sort();
        Some(acc)
    }
}

/// Sorts a bag so it can be compared with an oracle answer.
pub fn sorted(mut bag: Vec<SolutionMapping>) -> Vec<SolutionMapping> {
    bag.sort();
    bag
}
