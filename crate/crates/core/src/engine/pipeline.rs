//! Pull-based iterator pipeline with preemption points.
//!
//! Each operator advances in atomic steps: reading one index entry together
//! with bumping its offset, or pulling one outer mapping together with binding
//! the inner pattern. The quota clock is only consulted between such steps, so
//! whenever an operator returns `Preempted` its `(mu, offset)` pair describes
//! exactly the work done so far.

use std::collections::BTreeSet;

use super::clock::QuotaClock;
use super::state::{SavedNode, SavedPlanState};
use super::EngineError;
use crate::algebra::{PatternTerm, SolutionMapping, TriplePattern, Variable};
use crate::optimizer::PlanDescriptor;
use crate::store::{Dataset, IdPattern, TermId, Triple, TripleRange};

/// Variable slots of one pipeline, numbered in pipeline order.
#[derive(Debug, Clone, Default)]
struct Variables {
    names: Vec<Variable>,
}

impl Variables {
    fn slot(&mut self, v: &Variable) -> usize {
        match self.names.iter().position(|n| n == v) {
            Some(i) => i,
            None => {
                self.names.push(v.clone());
                self.names.len() - 1
            }
        }
    }

    fn lookup(&self, v: &Variable) -> Option<usize> {
        self.names.iter().position(|n| n == v)
    }
}

type Row = Vec<Option<TermId>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Const(TermId),
    Var(usize),
    /// A constant absent from the dictionary: the pattern has no match.
    Missing,
}

#[derive(Debug, Clone)]
struct CompiledPattern {
    pattern: TriplePattern,
    slots: [Slot; 3],
}

impl CompiledPattern {
    fn new(dataset: &Dataset, vars: &mut Variables, pattern: &TriplePattern) -> Self {
        let slot = |p: &PatternTerm, vars: &mut Variables| match p {
            PatternTerm::Term(t) => dataset.id_of(t).map_or(Slot::Missing, Slot::Const),
            PatternTerm::Variable(v) => Slot::Var(vars.slot(v)),
        };
        let slots = [slot(&pattern.subject, vars), slot(&pattern.predicate, vars), slot(&pattern.object, vars)];
        Self { pattern: pattern.clone(), slots }
    }

    /// The id pattern after substituting `row`, or `None` if it cannot match.
    fn bound(&self, row: &Row) -> Option<IdPattern> {
        let mut ids = [None; 3];
        for (id, slot) in ids.iter_mut().zip(self.slots) {
            *id = match slot {
                Slot::Const(c) => Some(c),
                Slot::Var(v) => row[v],
                Slot::Missing => return None,
            };
        }
        Some(IdPattern::new(ids[0], ids[1], ids[2]))
    }

    /// Extends `row` with `t`; `None` if a variable repeated in the pattern
    /// would get two different values.
    fn extend(&self, row: &Row, t: Triple) -> Option<Row> {
        let mut out = row.clone();
        for (slot, value) in self.slots.iter().zip(t.as_array()) {
            if let Slot::Var(v) = *slot {
                match out[v] {
                    Some(existing) if existing != value => return None,
                    _ => out[v] = Some(value),
                }
            }
        }
        Some(out)
    }

    fn range<'a>(&self, dataset: &'a Dataset, row: &Row) -> TripleRange<'a> {
        self.bound(row).map_or_else(TripleRange::empty, |p| dataset.range(&p))
    }
}

pub(crate) enum Step {
    Item(Row),
    Exhausted,
    Preempted,
}

/// Scans the left-most pattern of the plan.
struct ScanIterator<'a> {
    pattern: CompiledPattern,
    range: TripleRange<'a>,
    offset: usize,
    stopped: bool,
    width: usize,
}

impl ScanIterator<'_> {
    fn next(&mut self, clock: &QuotaClock) -> Step {
        loop {
            if self.stopped {
                return Step::Preempted;
            }
            let Some(t) = self.range.get(self.offset) else { return Step::Exhausted };
            self.offset += 1;
            clock.record_progress();
            if let Some(row) = self.pattern.extend(&vec![None; self.width], t) {
                return Step::Item(row);
            }
            if clock.expired() {
                return Step::Preempted;
            }
        }
    }
}

struct InnerScan<'a> {
    mu: Row,
    range: TripleRange<'a>,
    offset: usize,
}

/// Nested-loop join of its source with one base pattern.
struct NestedLoopIterator<'a> {
    dataset: &'a Dataset,
    source: Box<Operator<'a>>,
    pattern: CompiledPattern,
    current: Option<InnerScan<'a>>,
    stopped: bool,
}

impl NestedLoopIterator<'_> {
    fn next(&mut self, clock: &QuotaClock) -> Step {
        loop {
            if self.stopped {
                return Step::Preempted;
            }
            match &mut self.current {
                Some(inner) => match inner.range.get(inner.offset) {
                    Some(t) => {
                        inner.offset += 1;
                        clock.record_progress();
                        if let Some(row) = self.pattern.extend(&inner.mu, t) {
                            return Step::Item(row);
                        }
                        if clock.expired() {
                            return Step::Preempted;
                        }
                    }
                    None => self.current = None,
                },
                None => {
                    if clock.expired() {
                        return Step::Preempted;
                    }
                    match self.source.next(clock) {
                        Step::Item(mu) => {
                            let range = self.pattern.range(self.dataset, &mu);
                            if !range.is_empty() {
                                self.current = Some(InnerScan { mu, range, offset: 0 });
                            }
                        }
                        other => return other,
                    }
                }
            }
        }
    }
}

enum Operator<'a> {
    Scan(ScanIterator<'a>),
    NestedLoop(NestedLoopIterator<'a>),
}

impl<'a> Operator<'a> {
    fn next(&mut self, clock: &QuotaClock) -> Step {
        match self {
            Operator::Scan(it) => it.next(clock),
            Operator::NestedLoop(it) => it.next(clock),
        }
    }

    fn stop(&mut self) {
        match self {
            Operator::Scan(it) => it.stopped = true,
            Operator::NestedLoop(it) => {
                it.stopped = true;
                it.source.stop();
            }
        }
    }

    fn resume(&mut self) {
        match self {
            Operator::Scan(it) => it.stopped = false,
            Operator::NestedLoop(it) => {
                it.stopped = false;
                it.source.resume();
            }
        }
    }

    fn save(&self, dataset: &Dataset, vars: &Variables) -> SavedNode {
        match self {
            Operator::Scan(it) => SavedNode::Scan { pattern: it.pattern.pattern.clone(), offset: it.offset as u64 },
            Operator::NestedLoop(it) => SavedNode::NestedLoop {
                pattern: it.pattern.pattern.clone(),
                mu: it.current.as_ref().map(|c| {
                    let known = it.source.outer_row();
                    let added: Row =
                        c.mu.iter()
                            .enumerate()
                            .map(|(slot, id)| id.filter(|_| known.is_none_or(|k| k[slot].is_none())))
                            .collect();
                    row_to_mapping(dataset, vars, &added)
                }),
                offset: it.current.as_ref().map_or(0, |c| c.offset as u64),
                source: Box::new(it.source.save(dataset, vars)),
            },
        }
    }

    /// The outer mapping this operator is joining, if it holds one.
    fn outer_row(&self) -> Option<&Row> {
        match self {
            Operator::Scan(_) => None,
            Operator::NestedLoop(it) => it.current.as_ref().map(|c| &c.mu),
        }
    }

    fn pattern(&self) -> &CompiledPattern {
        match self {
            Operator::Scan(it) => &it.pattern,
            Operator::NestedLoop(it) => &it.pattern,
        }
    }

    fn collect_patterns<'s>(&'s self, out: &mut Vec<&'s TriplePattern>) {
        if let Operator::NestedLoop(it) = self {
            it.source.collect_patterns(out);
        }
        out.push(&self.pattern().pattern);
    }
}

fn row_to_mapping(dataset: &Dataset, vars: &Variables, row: &Row) -> SolutionMapping {
    row.iter().zip(&vars.names).filter_map(|(id, v)| id.map(|id| (v.clone(), dataset.term(id).clone()))).collect()
}

/// Why [`Pipeline::run`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// Every solution has been produced.
    Exhausted,
    /// The quota expired.
    Preempted,
    /// The page cap was reached.
    PageFull,
}

/// A live, preemptable evaluation of a left-linear plan.
pub struct Pipeline<'a> {
    dataset: &'a Dataset,
    vars: Variables,
    root: Operator<'a>,
    exhausted: bool,
}

impl<'a> Pipeline<'a> {
    /// A fresh pipeline for `plan`.
    pub fn new(dataset: &'a Dataset, plan: &PlanDescriptor) -> Self {
        let state = SavedPlanState::fresh(dataset.digest(), plan);
        Self::load(dataset, &state).expect("a fresh state is valid")
    }

    /// Rebuilds the operators of a saved plan without re-planning.
    pub fn load(dataset: &'a Dataset, state: &SavedPlanState) -> Result<Self, EngineError> {
        if state.digest != dataset.digest() {
            return Err(EngineError::ResumeOnWrongDataset {
                expected: dataset.digest().to_owned(),
                found: state.digest.clone(),
            });
        }
        let mut vars = Variables::default();
        for node in state.plan.chain() {
            for v in node.pattern().variables() {
                vars.slot(v);
            }
        }
        let root = build(dataset, &mut vars, &state.plan)?;
        Ok(Self { dataset, vars, root, exhausted: false })
    }

    /// Produces solutions until the pipeline is exhausted, `clock` expires or
    /// `max_results` solutions have been appended to `out`.
    pub fn run(&mut self, clock: &QuotaClock, max_results: Option<usize>, out: &mut Vec<SolutionMapping>) -> Halt {
        if self.exhausted {
            return Halt::Exhausted;
        }
        let mut produced = 0usize;
        loop {
            if max_results.is_some_and(|cap| produced >= cap) {
                return Halt::PageFull;
            }
            match self.root.next(clock) {
                Step::Item(row) => {
                    out.push(row_to_mapping(self.dataset, &self.vars, &row));
                    produced += 1;
                    if clock.expired() {
                        return Halt::Preempted;
                    }
                }
                Step::Exhausted => {
                    self.exhausted = true;
                    return Halt::Exhausted;
                }
                Step::Preempted => return Halt::Preempted,
            }
        }
    }

    /// Marks every operator stopped. Steps are atomic, so no operator can be
    /// caught inside a critical section here; a stopped pipeline refuses to
    /// advance until [`resume`](Self::resume).
    pub fn stop(&mut self) {
        self.root.stop();
    }

    pub fn resume(&mut self) {
        self.root.resume();
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// The continuation of this pipeline, or `None` once it is exhausted.
    pub fn save(&self) -> Option<SavedPlanState> {
        (!self.exhausted).then(|| SavedPlanState {
            digest: self.dataset.digest().to_owned(),
            plan: self.root.save(self.dataset, &self.vars),
        })
    }

    /// Patterns in pipeline order.
    pub fn patterns(&self) -> Vec<&TriplePattern> {
        let mut out = Vec::new();
        self.root.collect_patterns(&mut out);
        out
    }

    /// Unbound cardinality of each pattern, in pipeline order.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.patterns().into_iter().map(|p| self.dataset.cardinality(p)).collect()
    }
}

fn build<'a>(dataset: &'a Dataset, vars: &mut Variables, node: &SavedNode) -> Result<Operator<'a>, EngineError> {
    let invalid = |msg: String| EngineError::InvalidSavedState(msg);
    match node {
        SavedNode::Scan { pattern, offset } => {
            let compiled = CompiledPattern::new(dataset, vars, pattern);
            let range = compiled.range(dataset, &vec![None; vars.names.len()]);
            let offset = checked_offset(*offset, range.len())
                .ok_or_else(|| invalid(format!("scan offset {offset} exceeds {} matches of {pattern}", range.len())))?;
            Ok(Operator::Scan(ScanIterator {
                pattern: compiled,
                range,
                offset,
                stopped: false,
                width: vars.names.len(),
            }))
        }
        SavedNode::NestedLoop { pattern, mu, offset, source } => {
            let source_op = build(dataset, vars, source)?;
            let compiled = CompiledPattern::new(dataset, vars, pattern);
            let current = match mu {
                None if *offset != 0 => {
                    return Err(invalid(format!("offset {offset} without an outer mapping for {pattern}")))
                }
                None => None,
                Some(added) => {
                    let mut row: Row = source_op.outer_row().cloned().unwrap_or_else(|| vec![None; vars.names.len()]);
                    for (v, t) in added.iter() {
                        let id = dataset
                            .id_of(t)
                            .ok_or_else(|| invalid(format!("term {t} of the outer mapping is not in the dataset")))?;
                        let slot = vars.lookup(v).ok_or_else(|| {
                            invalid(format!("outer mapping for {pattern} binds unknown variable {v}"))
                        })?;
                        if row[slot].replace(id).is_some() {
                            return Err(invalid(format!("outer mapping for {pattern} rebinds {v}")));
                        }
                    }
                    let expected: BTreeSet<&Variable> =
                        source.chain().iter().flat_map(|n| n.pattern().variables()).collect();
                    let bound: BTreeSet<&Variable> =
                        row.iter().zip(&vars.names).filter(|(id, _)| id.is_some()).map(|(_, v)| v).collect();
                    if expected != bound {
                        return Err(invalid(format!(
                            "outer mapping for {pattern} does not bind exactly its source variables"
                        )));
                    }
                    let range = compiled.range(dataset, &row);
                    let offset = checked_offset(*offset, range.len()).ok_or_else(|| {
                        invalid(format!(
                            "inner offset {offset} exceeds {} matches of {}",
                            range.len(),
                            pattern.bind(&row_to_mapping(dataset, vars, &row))
                        ))
                    })?;
                    Some(InnerScan { mu: row, range, offset })
                }
            };
            Ok(Operator::NestedLoop(NestedLoopIterator {
                dataset,
                source: Box::new(source_op),
                pattern: compiled,
                current,
                stopped: false,
            }))
        }
    }
}

fn checked_offset(offset: u64, len: usize) -> Option<usize> {
    usize::try_from(offset).ok().filter(|&o| o <= len)
}
