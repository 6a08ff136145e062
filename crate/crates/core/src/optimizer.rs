//! Left-linear join ordering by triple pattern cardinality.
//!
//! The first pattern is the one with the fewest matches. Each following step
//! picks, among the patterns sharing a variable with those already placed, the
//! one with the fewest matches; only when no pattern is connected does the
//! plan fall back to a cartesian step. Ties go to the earlier BGP position.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::algebra::{Bgp, TriplePattern, Variable};
use crate::store::Dataset;

/// A node of a left-linear plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlanNode {
    Leaf { pattern: TriplePattern },
    NestedLoop { source: Box<PlanNode>, inner: TriplePattern },
}

impl PlanNode {
    /// Patterns in pipeline order, left-most leaf first.
    pub fn patterns(&self) -> Vec<&TriplePattern> {
        match self {
            PlanNode::Leaf { pattern } => vec![pattern],
            PlanNode::NestedLoop { source, inner } => {
                let mut out = source.patterns();
                out.push(inner);
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanDescriptor {
    pub root: PlanNode,
}

impl PlanDescriptor {
    /// Builds the left-linear tree joining `patterns` in the given order.
    pub fn left_linear(patterns: Vec<TriplePattern>) -> Option<Self> {
        let mut it = patterns.into_iter();
        let mut root = PlanNode::Leaf { pattern: it.next()? };
        for inner in it {
            root = PlanNode::NestedLoop { source: Box::new(root), inner };
        }
        Some(Self { root })
    }

    pub fn patterns(&self) -> Vec<&TriplePattern> {
        self.root.patterns()
    }
}

/// Join order as indexes into `cardinalities` / the BGP's patterns.
pub fn join_order(patterns: &[TriplePattern], cardinalities: &[usize]) -> Vec<usize> {
    debug_assert_eq!(patterns.len(), cardinalities.len());
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut order = Vec::with_capacity(patterns.len());
    let mut bound: BTreeSet<&Variable> = BTreeSet::new();
    while !remaining.is_empty() {
        let connected: Vec<usize> =
            remaining.iter().copied().filter(|&i| patterns[i].variables().iter().any(|v| bound.contains(v))).collect();
        let candidates = if connected.is_empty() { &remaining } else { &connected };
        let &next = candidates.iter().min_by_key(|&&i| (cardinalities[i], i)).expect("candidates are non-empty");
        remaining.retain(|&i| i != next);
        bound.extend(patterns[next].variables());
        order.push(next);
    }
    order
}

/// Plans `bgp` against the exact pattern cardinalities of `dataset`.
pub fn build_plan(dataset: &Dataset, bgp: &Bgp) -> PlanDescriptor {
    let patterns = bgp.patterns();
    let cardinalities: Vec<usize> = patterns.iter().map(|p| dataset.cardinality(p)).collect();
    let order = join_order(patterns, &cardinalities);
    PlanDescriptor::left_linear(order.into_iter().map(|i| patterns[i].clone()).collect())
        .expect("a BGP has at least one pattern")
}
