//! Configuration-driven experiments: convergence tables, rates and
//! comparison against reference eigenvalues.

mod config;
mod rates;
mod run;

pub use config::{
    CoarseSection, DomainConfig, EdgeRefinementConfig, ExperimentConfig, MaterialConfig,
    OracleSection, OutputSection, Reference, ReferenceFile, ReferenceSet, ReferenceSetRef,
    RefinementConfig, SchemeKind, SchemeSection, TensorValue,
};
pub use rates::{compute_rates, richardson_limit};
pub use run::{
    compare_reference, run_experiment, ConvergenceReport, ErrorBasis, ExperimentError, LevelInfo,
    Progress, ReferenceSummary, ReportMetadata, ReportRow, Verdict,
};
