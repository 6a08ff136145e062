//! Load generation, metrics and quantum tuning for the preemptive BGP server.

pub mod experiment;
pub mod metrics;
pub mod synth;
pub mod tuner;
pub mod workload;

pub use experiment::{run_experiment, ExperimentConfig, ExperimentReport};
pub use metrics::{QueryRecord, WorkloadMetrics};
pub use tuner::{select_quantum, tune_quantum, EngineProbe, RuntimeProbe, TuneError, Tuning};
pub use workload::{generate_workload, Shape, ShapeMix, Workload, WorkloadOptions, WorkloadQuery};
