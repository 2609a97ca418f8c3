//! Value types shared by every stage of the pipeline.
//!
//! All times are seconds on a floating-point simulation clock. Hours only
//! appear in reports that mirror hour-denominated tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::priority::PriorityEngineConfig;
use crate::queueing::AllocationTable;
use crate::workload::WorkloadSpec;

/// Identifier of a submitted job. Unique within a workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JobId(pub u64);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceDemand {
    /// Required processor count.
    pub processors: u32,
    /// Memory in GB.
    pub memory: f64,
    /// Storage in GB.
    pub storage: f64,
}

/// Commercial attributes of the submitting customer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusinessProfile {
    /// Value of the current order, in abstract currency units.
    pub order_amount: f64,
    /// Relationship score accumulated from past transactions.
    pub relationship: f64,
}

/// One submitted task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: JobId,
    /// Submission instant on the simulation clock.
    pub arrival_time: f64,
    /// Deadline, measured from submission.
    pub due_time: f64,
    pub exec_time: f64,
    /// Resource allocation and preparation time.
    pub prep_time: f64,
    pub demand: ResourceDemand,
    pub business: BusinessProfile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    Ok,
    /// Execution plus preparation exceeds the due time. Such jobs are still
    /// admitted; they simply cannot meet their deadline.
    Infeasible,
    Invalid(String),
}

impl ValidationResult {
    pub fn is_invalid(&self) -> bool {
        matches!(self, ValidationResult::Invalid(_))
    }
}

/// Checks the invariants of a job. NaN fails every positivity check.
pub fn validate_job(job: &Job) -> ValidationResult {
    let checks: [(bool, &str); 9] = [
        (job.arrival_time >= 0.0 && job.arrival_time.is_finite(), "arrival_time must be finite and >= 0"),
        (job.due_time > 0.0 && job.due_time.is_finite(), "due_time must be > 0"),
        (job.exec_time > 0.0 && job.exec_time.is_finite(), "exec_time must be > 0"),
        (job.prep_time >= 0.0 && job.prep_time.is_finite(), "prep_time must be >= 0"),
        (job.demand.processors >= 1, "processors must be >= 1"),
        (job.demand.memory > 0.0 && job.demand.memory.is_finite(), "memory must be > 0"),
        (job.demand.storage >= 0.0 && job.demand.storage.is_finite(), "storage must be >= 0"),
        (job.business.order_amount >= 0.0 && job.business.order_amount.is_finite(), "order_amount must be >= 0"),
        (job.business.relationship >= 0.0 && job.business.relationship.is_finite(), "relationship must be >= 0"),
    ];
    if let Some((_, reason)) = checks.iter().find(|(ok, _)| !ok) {
        return ValidationResult::Invalid((*reason).to_string());
    }
    if job.exec_time + job.prep_time > job.due_time {
        ValidationResult::Infeasible
    } else {
        ValidationResult::Ok
    }
}

/// One instance type offered by the provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceCatalogEntry {
    pub name: String,
    pub cores: u32,
    /// EC2 compute units.
    pub ecus: u32,
    /// RAM in GB.
    pub ram: f64,
    pub arch_bits: u32,
    /// Disk in GB.
    pub disk: f64,
    /// Dollars per hour.
    pub cost: f64,
}

impl ResourceCatalogEntry {
    fn new(name: &str, cores: u32, ecus: u32, ram: f64, arch_bits: u32, disk: f64, cost: f64) -> Self {
        Self { name: name.to_string(), cores, ecus, ram, arch_bits, disk, cost }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() {
            return Err("name must not be empty".into());
        }
        if self.cores == 0 || self.ecus == 0 {
            return Err(format!("{}: cores and ecus must be > 0", self.name));
        }
        if !(self.ram > 0.0 && self.disk > 0.0 && self.cost > 0.0) {
            return Err(format!("{}: ram, disk and cost must be > 0", self.name));
        }
        if self.arch_bits != 32 && self.arch_bits != 64 {
            return Err(format!("{}: arch_bits must be 32 or 64", self.name));
        }
        Ok(())
    }

    /// Whether this instance type can host the given demand.
    pub fn fits(&self, demand: &ResourceDemand) -> bool {
        self.cores >= demand.processors && self.ram >= demand.memory && self.disk >= demand.storage
    }

    /// The demand shape that exactly matches this instance type.
    pub fn as_demand(&self) -> ResourceDemand {
        ResourceDemand { processors: self.cores, memory: self.ram, storage: self.disk }
    }
}

/// The Amazon EC2 instance catalog used for cost accounting and placement.
pub fn default_catalog() -> Vec<ResourceCatalogEntry> {
    vec![
        ResourceCatalogEntry::new("m1.small", 1, 1, 1.7, 32, 160.0, 0.1),
        ResourceCatalogEntry::new("m1.large", 2, 4, 7.5, 64, 850.0, 0.4),
        ResourceCatalogEntry::new("m1.xlarge", 4, 8, 15.0, 64, 1690.0, 0.8),
        ResourceCatalogEntry::new("c1.medium", 2, 5, 1.7, 32, 350.0, 0.2),
        ResourceCatalogEntry::new("c1.xlarge", 8, 20, 7.0, 64, 1690.0, 0.8),
    ]
}

/// Two-dimensional priority key: queue class first, then position within
/// the class. Smaller is better in both components, so the derived
/// lexicographic `Ord` is the chain order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChainKey {
    pub class: u32,
    pub position: u64,
}

impl ChainKey {
    pub fn new(class: u32, position: u64) -> Self {
        Self { class, position }
    }
}

impl fmt::Display for ChainKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.class, self.position)
    }
}

/// Every derived priority quantity for one job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorityRecord {
    /// Latest start offset from arrival; negative when already late.
    pub t_start: f64,
    pub demand_weight: f64,
    pub tp_score: f64,
    pub bp_score: f64,
    pub resultant: f64,
    /// 1 is best.
    pub rank: u32,
    pub chain: ChainKey,
}

/// Which score drives ranking: the technical score alone, or the
/// business-adjusted resultant score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityMode {
    Native,
    Resultant,
}

impl PriorityMode {
    pub fn label(self) -> &'static str {
        match self {
            PriorityMode::Native => "native",
            PriorityMode::Resultant => "resultant",
        }
    }
}

impl fmt::Display for PriorityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How arrivals are mapped to queue classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassPolicy {
    /// Classification gate: class derived from the priority rank.
    #[default]
    Gate,
    /// Each arrival joins class i with probability rate_i / total rate.
    /// Used to drive per-class Poisson streams for the analytic cross-check.
    Thinned,
}

/// Engine-level knobs that are not owned by the workload or priority stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSettings {
    pub num_vms: u32,
    /// Delay before a job refused by the allocation gate retries.
    pub retry_interval: f64,
    /// A job deferred more often than this aborts the run.
    pub max_retries: u64,
    /// Queue length beyond which the run is declared unstable.
    pub max_queue_len: usize,
    /// Base service rate scaled by each class's satisfaction level.
    pub mu_base: f64,
    pub class_policy: ClassPolicy,
}

impl Default for EngineSettings {
    fn default() -> Self {
        Self {
            num_vms: 2500,
            retry_interval: 1.0,
            max_retries: 1_000_000,
            max_queue_len: 1_000_000,
            mu_base: 1.0,
            class_policy: ClassPolicy::Gate,
        }
    }
}

/// Complete scenario description: workload, priority engine, pool and
/// allocation gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub simulation: EngineSettings,
    pub workload: WorkloadSpec,
    pub priority: PriorityEngineConfig,
    pub catalog: Vec<ResourceCatalogEntry>,
    pub allocation_bands: AllocationTable,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            simulation: EngineSettings::default(),
            workload: WorkloadSpec::default(),
            priority: PriorityEngineConfig::default(),
            catalog: default_catalog(),
            allocation_bands: AllocationTable::default(),
        }
    }
}

/// A failed config invariant, with the dotted key path it concerns.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigViolation {
    pub path: String,
    pub message: String,
}

impl ConfigViolation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl SimConfig {
    /// Number of priority queues, equal to the number of class rates.
    pub fn num_classes(&self) -> usize {
        self.workload.class_rates.len()
    }

    pub fn validate(&self) -> Result<(), ConfigViolation> {
        let s = &self.simulation;
        if s.num_vms == 0 {
            return Err(ConfigViolation::new("simulation.num_vms", "num_vms must be >= 1"));
        }
        if !(s.retry_interval > 0.0 && s.retry_interval.is_finite()) {
            return Err(ConfigViolation::new("simulation.retry_interval", "retry_interval must be > 0"));
        }
        if !(s.mu_base > 0.0 && s.mu_base.is_finite()) {
            return Err(ConfigViolation::new("simulation.mu_base", "mu_base must be > 0"));
        }
        if s.max_queue_len == 0 {
            return Err(ConfigViolation::new("simulation.max_queue_len", "max_queue_len must be >= 1"));
        }
        self.workload.validate().map_err(|v| v.prefixed("workload"))?;
        if self.workload.shape_weights.len() != self.catalog.len() {
            return Err(ConfigViolation::new(
                "workload.shape_weights",
                format!(
                    "shape_weights has {} entries but the catalog has {}",
                    self.workload.shape_weights.len(),
                    self.catalog.len()
                ),
            ));
        }
        self.priority.validate().map_err(|v| v.prefixed("priority"))?;
        if self.catalog.is_empty() {
            return Err(ConfigViolation::new("catalog", "catalog must not be empty"));
        }
        for (i, entry) in self.catalog.iter().enumerate() {
            entry.validate().map_err(|m| ConfigViolation::new(format!("catalog[{i}]"), m))?;
        }
        self.allocation_bands.validate().map_err(|v| v.prefixed("allocation_bands"))?;
        Ok(())
    }
}

impl ConfigViolation {
    pub(crate) fn prefixed(self, prefix: &str) -> Self {
        let path = if self.path.is_empty() {
            prefix.to_string()
        } else if self.path.starts_with('[') {
            format!("{prefix}{}", self.path)
        } else {
            format!("{prefix}.{}", self.path)
        };
        Self { path, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table_three_job(id: u64) -> Job {
        Job {
            id: JobId(id),
            arrival_time: 0.0,
            due_time: 700.0,
            exec_time: 650.0,
            prep_time: 5.0,
            demand: ResourceDemand { processors: 1, memory: 1.5, storage: 100.0 },
            business: BusinessProfile { order_amount: 0.0, relationship: 0.0 },
        }
    }

    #[test]
    fn table_three_job_is_ok() {
        assert_eq!(validate_job(&table_three_job(1)), ValidationResult::Ok);
    }

    #[test]
    fn over_budget_job_is_infeasible() {
        let job = Job { due_time: 100.0, exec_time: 100.0, prep_time: 5.0, ..table_three_job(1) };
        assert_eq!(validate_job(&job), ValidationResult::Infeasible);
    }

    #[test]
    fn zero_exec_is_invalid() {
        let job = Job { exec_time: 0.0, ..table_three_job(1) };
        assert_eq!(validate_job(&job), ValidationResult::Invalid("exec_time must be > 0".into()));
    }

    #[test]
    fn nan_fields_are_invalid() {
        let job = Job { due_time: f64::NAN, ..table_three_job(1) };
        assert!(validate_job(&job).is_invalid());
        let mut job = table_three_job(1);
        job.demand.memory = f64::NAN;
        assert!(validate_job(&job).is_invalid());
        let mut job = table_three_job(1);
        job.demand.processors = 0;
        assert_eq!(validate_job(&job), ValidationResult::Invalid("processors must be >= 1".into()));
    }

    #[test]
    fn catalog_matches_ec2_rows() {
        let catalog = default_catalog();
        assert_eq!(catalog.len(), 5);
        let small = &catalog[0];
        assert_eq!(
            (small.name.as_str(), small.cores, small.ram, small.arch_bits, small.disk, small.cost),
            ("m1.small", 1, 1.7, 32, 160.0, 0.1)
        );
        let c1x = catalog.iter().find(|e| e.name == "c1.xlarge").unwrap();
        assert_eq!((c1x.cores, c1x.ecus, c1x.ram, c1x.arch_bits, c1x.disk, c1x.cost), (8, 20, 7.0, 64, 1690.0, 0.8));
        assert!(catalog.iter().all(|e| e.validate().is_ok()));
    }

    #[test]
    fn chain_key_orders_class_first() {
        assert!(ChainKey::new(1, 5) < ChainKey::new(2, 1));
        assert!(ChainKey::new(3, 1) < ChainKey::new(3, 2));
    }

    #[test]
    fn default_config_validates() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn config_violations_carry_paths() {
        let mut cfg = SimConfig::default();
        cfg.priority.beta = 150.0;
        let err = cfg.validate().unwrap_err();
        assert_eq!(err.path, "priority.beta");
        assert_eq!(err.message, "beta must be in [0,100]");

        let mut cfg = SimConfig::default();
        cfg.catalog[2].arch_bits = 16;
        assert_eq!(cfg.validate().unwrap_err().path, "catalog[2]");
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SimConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }
}
