//! Cloud task scheduling with hybrid technical and business priority.
//!
//! Jobs are scored on start-time urgency and resource demand, boosted by
//! business value above a threshold, classified into non-preemptive
//! priority queues and admitted through a rank-dependent probabilistic
//! allocation gate onto an instance catalog. A discrete-event simulator
//! ties the stages together and reports waiting times, deadline QoS,
//! utilization and cost.

pub mod domain;
pub mod priority;
pub mod queueing;
pub mod rng;
pub mod simulator;
pub mod workload;

pub use domain::{
    default_catalog, validate_job, BusinessProfile, ChainKey, ClassPolicy, ConfigViolation, EngineSettings, Job, JobId,
    PriorityMode, PriorityRecord, ResourceCatalogEntry, ResourceDemand, SimConfig, ValidationResult,
};
pub use priority::PriorityEngineConfig;
pub use queueing::{AllocationBand, AllocationTable, Mg1Class};
pub use simulator::{run, run_paired, SimError, SimReport};
pub use workload::{TimeDistribution, WorkloadSpec};
