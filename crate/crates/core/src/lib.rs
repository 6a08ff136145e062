//! Preemptable evaluation of basic graph patterns.
//!
//! [`store`] holds an immutable dictionary-encoded triple store whose scans can
//! resume at any offset cheaply; [`algebra`] the query data model;
//! [`optimizer`] the left-linear join ordering; [`engine`] the nested-loop
//! pipeline that can be stopped, saved and reloaded between quanta.

pub mod algebra;
pub mod engine;
pub mod optimizer;
pub mod store;

pub use algebra::{
    apply_mapping, extend_mapping, AlgebraError, Bgp, PatternTerm, SolutionMapping, TriplePattern, Variable,
};
pub use engine::{run_quantum, EngineError, Pipeline, Quantum, QuotaClock, SavedPlanState};
pub use optimizer::{build_plan, PlanDescriptor, PlanNode};
pub use store::{Dataset, Term, TermId, Triple};
