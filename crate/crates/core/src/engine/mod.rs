//! Preemptable plan execution.
//!
//! A plan runs for one quantum, is stopped at the next preemption point, and
//! its state is saved as a [`SavedPlanState`]. Loading that state later and
//! running it to completion yields exactly the solutions not yet produced, in
//! the same order a single uninterrupted run would have produced them.

mod clock;
mod pipeline;
mod state;

pub use clock::{Quantum, QuantumError, QuotaClock};
pub use pipeline::{Halt, Pipeline};
pub use state::{SavedNode, SavedPlanState};

use crate::algebra::SolutionMapping;
use crate::store::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("saved plan belongs to dataset {found}, this server holds {expected}")]
    ResumeOnWrongDataset { expected: String, found: String },
    #[error("invalid saved state: {0}")]
    InvalidSavedState(String),
}

/// Solutions of one quantum and the continuation, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumOutput {
    pub results: Vec<SolutionMapping>,
    /// `None` once the plan is exhausted.
    pub resume: Option<SavedPlanState>,
}

/// Loads `state`, runs it until `clock` expires, the page is full or the plan
/// is exhausted, then stops and saves it.
pub fn run_quantum(
    dataset: &Dataset,
    state: &SavedPlanState,
    clock: &QuotaClock,
    max_results: Option<usize>,
) -> Result<QuantumOutput, EngineError> {
    let mut pipeline = Pipeline::load(dataset, state)?;
    let mut results = Vec::new();
    pipeline.run(clock, max_results, &mut results);
    pipeline.stop();
    Ok(QuantumOutput { results, resume: pipeline.save() })
}

/// Runs `state` to completion with an unlimited quota.
pub fn run_to_completion(dataset: &Dataset, state: &SavedPlanState) -> Result<Vec<SolutionMapping>, EngineError> {
    Ok(run_quantum(dataset, state, &QuotaClock::unlimited(), None)?.results)
}
