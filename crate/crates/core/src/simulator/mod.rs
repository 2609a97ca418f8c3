//! Discrete-event engine, reports, paired native/resultant runs, the
//! analytic cross-check and table replication.

mod analytic;
mod engine;
mod paired;
mod replicate;
mod report;

pub use analytic::{compare_analytic, AnalyticError, ClassComparison, MIN_SAMPLES_PER_CLASS};
pub use engine::{run, Event, EventKind, SimError};
pub use paired::{compare_runs, run_paired, PairedComparison, PairedRuns};
pub use replicate::{
    model_series, paper_waiting_model, read_bundle_rows, replicate_tables, write_bundle, OutOfDomain, Provenance,
    ReplicationBundle, ReplicationRow, ReplicationSettings, WaitingModel, BUNDLE_HEADER, NATIVE_WAIT_ROWS,
    REFERENCE_BANDS, RESULTANT_WAIT_ROWS, THRESHOLD_ROWS,
};
pub use report::{
    deadline_qos, write_band_table, write_job_table, BandStats, ClassStats, Counters, InvariantChecks, JobRecord,
    JobStatus, Qos, RunStatus, SimReport, BAND_TABLE_HEADER, JOB_TABLE_HEADER,
};
