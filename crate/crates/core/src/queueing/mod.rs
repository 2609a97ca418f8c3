//! Intake pipeline: job collection, priority classification into
//! per-class queues, the probabilistic allocation gate and the resource
//! pool, plus closed-form non-preemptive priority M/G/1 delays.

mod allocation;
mod mg1;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{validate_job, ChainKey, Job, JobId, PriorityRecord, ValidationResult};
use crate::priority::rank_to_score;

pub use allocation::{
    allocation_probability, AllocationBand, AllocationError, AllocationOutcome, AllocationTable, Instance,
    ResourcePool, BLANK_TIME_DECAY,
};
pub use mg1::{mg1_waiting, Mg1Class, Mg1Error};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acknowledgement {
    pub job: JobId,
    pub ack_time: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("job {job} rejected: {reason}")]
pub struct Rejection {
    pub job: JobId,
    pub reason: String,
}

/// Job collection point. Invalid jobs are rejected; infeasible ones are
/// acknowledged and carried through.
pub fn collect(job: &Job, clock: f64) -> Result<Acknowledgement, Rejection> {
    match validate_job(job) {
        ValidationResult::Invalid(reason) => Err(Rejection { job: job.id, reason }),
        ValidationResult::Ok | ValidationResult::Infeasible => Ok(Acknowledgement { job: job.id, ack_time: clock }),
    }
}

/// `ceil(rank * n / 100)`, so rank 1 always maps to class 1 and rank 100
/// to class `n`.
pub fn class_index(rank: u32, n_classes: u32) -> u32 {
    let rank = rank.clamp(1, 100);
    (rank * n_classes).div_ceil(100).clamp(1, n_classes)
}

/// Assigns queue classes and within-class positions.
#[derive(Debug, Clone)]
pub struct ClassificationGate {
    next_position: Vec<u64>,
}

impl ClassificationGate {
    pub fn new(n_classes: u32) -> Self {
        assert!(n_classes >= 1, "at least one class");
        Self { next_position: vec![1; n_classes as usize] }
    }

    pub fn n_classes(&self) -> u32 {
        self.next_position.len() as u32
    }

    /// Classifies by rank and stamps the record's chain key.
    pub fn classify(&mut self, record: &mut PriorityRecord) -> u32 {
        let class = class_index(record.rank, self.n_classes());
        record.chain = self.assign(class);
        class
    }

    /// Next chain key within an explicitly chosen class.
    pub fn assign(&mut self, class: u32) -> ChainKey {
        let slot = &mut self.next_position[(class - 1) as usize];
        let key = ChainKey::new(class, *slot);
        *slot += 1;
        key
    }
}

/// One priority queue. Jobs leave in chain order.
#[derive(Debug, Clone)]
pub struct QueueClass {
    pub index: u32,
    pub service_rate: f64,
    jobs: BTreeMap<ChainKey, JobId>,
}

impl QueueClass {
    pub fn new(index: u32, service_rate: f64) -> Self {
        Self { index, service_rate, jobs: BTreeMap::new() }
    }

    pub fn push(&mut self, key: ChainKey, job: JobId) {
        debug_assert_eq!(key.class, self.index);
        self.jobs.insert(key, job);
    }

    pub fn pop(&mut self) -> Option<(ChainKey, JobId)> {
        self.jobs.pop_first()
    }

    pub fn peek(&self) -> Option<(&ChainKey, &JobId)> {
        self.jobs.first_key_value()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// Nominal satisfaction score of a class: the score of its best rank.
pub fn class_sls(class: u32, n_classes: u32) -> f64 {
    let best_rank = (class - 1) * 100 / n_classes + 1;
    rank_to_score(best_rank).min(100.0)
}

/// The set of class queues, best class first.
#[derive(Debug, Clone)]
pub struct ClassQueues {
    classes: Vec<QueueClass>,
}

impl ClassQueues {
    /// Builds `n` queues with `mu_i = mu_base * sls_i / 100`.
    pub fn new(n_classes: u32, mu_base: f64) -> Self {
        let classes = (1..=n_classes).map(|i| QueueClass::new(i, mu_base * class_sls(i, n_classes) / 100.0)).collect();
        Self { classes }
    }

    pub fn push(&mut self, key: ChainKey, job: JobId) {
        self.classes[(key.class - 1) as usize].push(key, job);
    }

    /// Head of the best non-empty class.
    pub fn pop_best(&mut self) -> Option<(ChainKey, JobId)> {
        self.classes.iter_mut().find(|c| !c.is_empty()).and_then(QueueClass::pop)
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(QueueClass::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.iter().all(QueueClass::is_empty)
    }

    pub fn classes(&self) -> &[QueueClass] {
        &self.classes
    }
}
