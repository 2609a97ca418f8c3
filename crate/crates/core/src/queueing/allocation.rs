use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ConfigViolation, Job, ResourceCatalogEntry, ResourceDemand};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocationError {
    #[error("rank {0} outside [1,100]")]
    RankOutOfRange(u32),
    #[error("no catalog entry can host {0:?}")]
    UnsatisfiableDemand(ResourceDemand),
    #[error("release on an empty pool")]
    EmptyPool,
}

/// Allocation probability for a contiguous range of ranks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationBand {
    pub lo: u32,
    pub hi: u32,
    pub probability: f64,
}

impl AllocationBand {
    pub fn label(&self) -> String {
        format!("{}-{}", self.lo, self.hi)
    }
}

/// Rank bands with their allocation probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AllocationTable {
    pub bands: Vec<AllocationBand>,
}

impl Default for AllocationTable {
    /// Ranks 1-60 from the EC2 allocation statistics; 61-100 continue the
    /// 0.1-per-decade decline.
    fn default() -> Self {
        let probs = [1.0, 1.0, 0.9, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3];
        let bands = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| AllocationBand { lo: i as u32 * 10 + 1, hi: i as u32 * 10 + 10, probability: p })
            .collect();
        Self { bands }
    }
}

impl AllocationTable {
    pub fn new(bands: Vec<AllocationBand>) -> Result<Self, ConfigViolation> {
        let table = Self { bands };
        table.validate()?;
        Ok(table)
    }

    /// Bands must tile `[1,100]` in order, with probabilities in `(0,1]`
    /// that never increase.
    pub fn validate(&self) -> Result<(), ConfigViolation> {
        let mut next = 1;
        let mut prev_p = f64::INFINITY;
        for (i, band) in self.bands.iter().enumerate() {
            let at = |m: String| ConfigViolation::new(format!("[{i}]"), m);
            if band.lo != next || band.hi < band.lo {
                return Err(at(format!("band {} must start at rank {next} and not be empty", band.label())));
            }
            if !(band.probability > 0.0 && band.probability <= 1.0) {
                return Err(at(format!("probability {} must be in (0,1]", band.probability)));
            }
            if band.probability > prev_p {
                return Err(at(format!("probability {} increases over the previous band", band.probability)));
            }
            next = band.hi + 1;
            prev_p = band.probability;
        }
        if next != 101 {
            return Err(ConfigViolation::new("", format!("bands cover ranks 1-{} instead of 1-100", next - 1)));
        }
        Ok(())
    }

    pub fn band_for(&self, rank: u32) -> Option<&AllocationBand> {
        self.bands.iter().find(|b| (b.lo..=b.hi).contains(&rank))
    }
}

pub fn allocation_probability(rank: u32, table: &AllocationTable) -> Result<f64, AllocationError> {
    if !(1..=100).contains(&rank) {
        return Err(AllocationError::RankOutOfRange(rank));
    }
    table.band_for(rank).map(|b| b.probability).ok_or(AllocationError::RankOutOfRange(rank))
}

/// A granted instance, identified by its catalog row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub catalog_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AllocationOutcome {
    Allocated(Instance),
    Deferred { retry_at: f64 },
}

/// Decay of the blank-time moving average.
pub const BLANK_TIME_DECAY: f64 = 0.9;

/// The VM pool behind the global scheduler. Each job occupies one
/// instance of the cheapest catalog type that fits it.
#[derive(Debug, Clone)]
pub struct ResourcePool {
    capacity: u32,
    in_use: u32,
    catalog: Vec<ResourceCatalogEntry>,
    /// Indices into `catalog`, cheapest first.
    by_cost: Vec<usize>,
    blank_time_feedback: f64,
}

impl ResourcePool {
    pub fn new(capacity: u32, catalog: Vec<ResourceCatalogEntry>) -> Self {
        let mut by_cost: Vec<usize> = (0..catalog.len()).collect();
        by_cost.sort_by(|&a, &b| catalog[a].cost.total_cmp(&catalog[b].cost).then(a.cmp(&b)));
        Self { capacity, in_use: 0, catalog, by_cost, blank_time_feedback: 0.0 }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn in_use(&self) -> u32 {
        self.in_use
    }

    pub fn has_capacity(&self) -> bool {
        self.in_use < self.capacity
    }

    pub fn catalog(&self) -> &[ResourceCatalogEntry] {
        &self.catalog
    }

    /// Current blank-time estimate; zero whenever the pool has headroom.
    pub fn blank_time_feedback(&self) -> f64 {
        self.blank_time_feedback
    }

    /// Cheapest catalog entry able to host the demand; ties keep catalog order.
    pub fn cheapest_fit(&self, demand: &ResourceDemand) -> Option<Instance> {
        self.by_cost
            .iter()
            .copied()
            .find(|&i| self.catalog[i].fits(demand))
            .map(|catalog_index| Instance { catalog_index })
    }

    /// One pass through the allocation gate. The Bernoulli draw happens only
    /// when the pool has headroom.
    pub fn try_allocate<R: Rng>(
        &mut self,
        job: &Job,
        rank: u32,
        table: &AllocationTable,
        rng: &mut R,
        clock: f64,
        retry_interval: f64,
    ) -> Result<AllocationOutcome, AllocationError> {
        let instance = self.cheapest_fit(&job.demand).ok_or(AllocationError::UnsatisfiableDemand(job.demand))?;
        let probability = allocation_probability(rank, table)?;
        if !self.has_capacity() {
            return Ok(AllocationOutcome::Deferred { retry_at: clock + retry_interval });
        }
        if rng.random::<f64>() < probability {
            self.in_use += 1;
            if self.has_capacity() {
                self.blank_time_feedback = 0.0;
            }
            Ok(AllocationOutcome::Allocated(instance))
        } else {
            Ok(AllocationOutcome::Deferred { retry_at: clock + retry_interval })
        }
    }

    /// Folds the queueing delay of a fresh allocation into the blank-time
    /// estimate. Only saturated allocations count.
    pub fn observe_allocation_delay(&mut self, delay: f64) {
        if self.has_capacity() {
            self.blank_time_feedback = 0.0;
        } else {
            self.blank_time_feedback =
                BLANK_TIME_DECAY * self.blank_time_feedback + (1.0 - BLANK_TIME_DECAY) * delay.max(0.0);
        }
    }

    pub fn release(&mut self, _instance: Instance) -> Result<(), AllocationError> {
        if self.in_use == 0 {
            return Err(AllocationError::EmptyPool);
        }
        self.in_use -= 1;
        self.blank_time_feedback = 0.0;
        Ok(())
    }
}
