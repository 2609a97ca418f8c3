//! Synthetic workload generation and job-file I/O.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution as _, Uniform};
use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::domain::{
    validate_job, BusinessProfile, ConfigViolation, Job, JobId, ResourceCatalogEntry, ResourceDemand, ValidationResult,
};
use crate::rng::{substream, Stream};

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("arrival rate must be > 0 (got {0})")]
    InvalidRate(f64),
    #[error("invalid workload: {0}")]
    InvalidSpec(#[from] ConfigViolation),
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("record {record}: {reason}")]
    Parse { record: usize, reason: String },
    #[error("record {record}: {reason}")]
    Invalid { record: usize, reason: String },
}

/// A distribution for one timing attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeDistribution {
    Fixed { value: f64 },
    Uniform { low: f64, high: f64 },
    Exponential { mean: f64 },
}

impl TimeDistribution {
    fn validate(&self) -> Result<(), String> {
        match *self {
            TimeDistribution::Fixed { value } if value >= 0.0 && value.is_finite() => Ok(()),
            TimeDistribution::Fixed { value } => Err(format!("fixed value must be finite and >= 0 (got {value})")),
            TimeDistribution::Uniform { low, high } if low >= 0.0 && high >= low && high.is_finite() => Ok(()),
            TimeDistribution::Uniform { low, high } => {
                Err(format!("uniform needs 0 <= low <= high (got {low}, {high})"))
            }
            TimeDistribution::Exponential { mean } if mean > 0.0 && mean.is_finite() => Ok(()),
            TimeDistribution::Exponential { mean } => Err(format!("exponential mean must be > 0 (got {mean})")),
        }
    }

    /// Fixed distributions never touch the generator.
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            TimeDistribution::Fixed { value } => value,
            TimeDistribution::Uniform { low, high } => sample_range(rng, low, high),
            TimeDistribution::Exponential { mean } => Exp::new(1.0 / mean).expect("validated mean").sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            TimeDistribution::Fixed { value } => value,
            TimeDistribution::Uniform { low, high } => 0.5 * (low + high),
            TimeDistribution::Exponential { mean } => mean,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            TimeDistribution::Fixed { value } => value * value,
            TimeDistribution::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
            TimeDistribution::Exponential { mean } => 2.0 * mean * mean,
        }
    }
}

fn sample_range<R: Rng>(rng: &mut R, low: f64, high: f64) -> f64 {
    if high > low {
        Uniform::new_inclusive(low, high).expect("validated range").sample(rng)
    } else {
        low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    /// Merged arrival rate in jobs per second.
    pub arrival_rate: f64,
    /// Per-class rates; their count is the number of priority queues.
    pub class_rates: Vec<f64>,
    pub num_tasks: usize,
    pub due: TimeDistribution,
    pub exec: TimeDistribution,
    pub prep: TimeDistribution,
    /// Sampling weight of each catalog entry's shape as a job demand.
    pub shape_weights: Vec<f64>,
    /// Inclusive `[low, high]` range of order amounts.
    pub order_amount: [f64; 2],
    pub relationship: [f64; 2],
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        let rate = 1.0;
        Self {
            arrival_rate: rate,
            class_rates: vec![rate / 6.0; 6],
            num_tasks: 2000,
            due: TimeDistribution::Fixed { value: 700.0 },
            exec: TimeDistribution::Fixed { value: 650.0 },
            prep: TimeDistribution::Fixed { value: 5.0 },
            shape_weights: vec![1.0; 5],
            order_amount: [0.0, crate::priority::DEFAULT_MAX_ORDER],
            relationship: [0.0, 100.0],
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), ConfigViolation> {
        if !(self.arrival_rate > 0.0 && self.arrival_rate.is_finite()) {
            return Err(ConfigViolation::new(
                "arrival_rate",
                format!("arrival_rate must be > 0 (got {})", self.arrival_rate),
            ));
        }
        if self.class_rates.is_empty() {
            return Err(ConfigViolation::new("class_rates", "at least one class rate is required"));
        }
        if self.class_rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(ConfigViolation::new("class_rates", "class rates must be finite and >= 0"));
        }
        let sum: f64 = self.class_rates.iter().sum();
        if (sum - self.arrival_rate).abs() > 1e-9 * self.arrival_rate {
            return Err(ConfigViolation::new(
                "class_rates",
                format!("class_rates sum to {sum} but arrival_rate is {}", self.arrival_rate),
            ));
        }
        if self.num_tasks == 0 {
            return Err(ConfigViolation::new("num_tasks", "num_tasks must be >= 1"));
        }
        for (key, dist) in [("due", &self.due), ("exec", &self.exec), ("prep", &self.prep)] {
            dist.validate().map_err(|m| ConfigViolation::new(key, m))?;
        }
        if self.shape_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || self.shape_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(ConfigViolation::new("shape_weights", "shape weights must be >= 0 with a positive sum"));
        }
        for (key, [lo, hi]) in [("order_amount", self.order_amount), ("relationship", self.relationship)] {
            if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
                return Err(ConfigViolation::new(
                    key,
                    format!("range must satisfy 0 <= low <= high (got [{lo}, {hi}])"),
                ));
            }
        }
        Ok(())
    }
}

/// Poisson arrival instants: cumulative sums of exponential gaps with mean
/// `1 / arrival_rate`.
pub fn generate_arrivals(spec: &WorkloadSpec, seed: u64) -> Result<Vec<f64>, WorkloadError> {
    let rate = spec.arrival_rate;
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(WorkloadError::InvalidRate(rate));
    }
    let gaps = Exp::new(rate).map_err(|_| WorkloadError::InvalidRate(rate))?;
    let mut rng = substream(seed, Stream::Arrivals);
    let mut clock = 0.0;
    Ok((0..spec.num_tasks)
        .map(|_| {
            clock += gaps.sample(&mut rng);
            clock
        })
        .collect())
}

/// One job per arrival. Job ids are 1-based in arrival order.
pub fn sample_jobs(
    spec: &WorkloadSpec,
    arrivals: &[f64],
    catalog: &[ResourceCatalogEntry],
    seed: u64,
) -> Result<Vec<Job>, WorkloadError> {
    spec.validate()?;
    if spec.shape_weights.len() != catalog.len() {
        return Err(ConfigViolation::new(
            "shape_weights",
            format!("{} weights for {} catalog entries", spec.shape_weights.len(), catalog.len()),
        )
        .into());
    }
    let shapes =
        WeightedIndex::new(&spec.shape_weights).map_err(|e| ConfigViolation::new("shape_weights", e.to_string()))?;
    let mut due_rng = substream(seed, Stream::DueTime);
    let mut exec_rng = substream(seed, Stream::ExecTime);
    let mut prep_rng = substream(seed, Stream::PrepTime);
    let mut shape_rng = substream(seed, Stream::Shape);
    let mut order_rng = substream(seed, Stream::OrderAmount);
    let mut rel_rng = substream(seed, Stream::Relationship);

    Ok(arrivals
        .iter()
        .enumerate()
        .map(|(i, &arrival)| Job {
            id: JobId(i as u64 + 1),
            arrival_time: arrival,
            due_time: spec.due.sample(&mut due_rng),
            exec_time: spec.exec.sample(&mut exec_rng),
            prep_time: spec.prep.sample(&mut prep_rng),
            demand: catalog[shapes.sample(&mut shape_rng)].as_demand(),
            business: BusinessProfile {
                order_amount: sample_range(&mut order_rng, spec.order_amount[0], spec.order_amount[1]),
                relationship: sample_range(&mut rel_rng, spec.relationship[0], spec.relationship[1]),
            },
        })
        .collect())
}

/// Arrivals followed by attribute sampling.
pub fn generate_jobs(
    spec: &WorkloadSpec,
    catalog: &[ResourceCatalogEntry],
    seed: u64,
) -> Result<Vec<Job>, WorkloadError> {
    let arrivals = generate_arrivals(spec, seed)?;
    sample_jobs(spec, &arrivals, catalog, seed)
}

/// Assigns each of `count` arrivals to a 1-based class with probability
/// proportional to its class rate.
pub fn thin_classes(count: usize, class_rates: &[f64], seed: u64) -> Result<Vec<u32>, WorkloadError> {
    let index = WeightedIndex::new(class_rates).map_err(|e| ConfigViolation::new("class_rates", e.to_string()))?;
    let mut rng = substream(seed, Stream::ClassThinning);
    Ok((0..count).map(|_| index.sample(&mut rng) as u32 + 1).collect())
}

/// Column layout of the job file.
pub const JOB_FILE_HEADER: [&str; 10] =
    ["id", "arrival", "due", "exec", "prep", "pn", "mem", "storage", "order_amount", "relationship"];

#[derive(Debug, Serialize, Deserialize)]
struct JobRow {
    id: u64,
    arrival: f64,
    due: f64,
    exec: f64,
    prep: f64,
    pn: u32,
    mem: f64,
    storage: f64,
    order_amount: f64,
    relationship: f64,
}

impl From<&Job> for JobRow {
    fn from(j: &Job) -> Self {
        Self {
            id: j.id.0,
            arrival: j.arrival_time,
            due: j.due_time,
            exec: j.exec_time,
            prep: j.prep_time,
            pn: j.demand.processors,
            mem: j.demand.memory,
            storage: j.demand.storage,
            order_amount: j.business.order_amount,
            relationship: j.business.relationship,
        }
    }
}

impl From<JobRow> for Job {
    fn from(r: JobRow) -> Self {
        Job {
            id: JobId(r.id),
            arrival_time: r.arrival,
            due_time: r.due,
            exec_time: r.exec,
            prep_time: r.prep,
            demand: ResourceDemand { processors: r.pn, memory: r.mem, storage: r.storage },
            business: BusinessProfile { order_amount: r.order_amount, relationship: r.relationship },
        }
    }
}

/// Parses a job file. Infeasible jobs are accepted; invalid ones fail.
pub fn parse_jobs<R: Read>(reader: R) -> Result<Vec<Job>, LoadError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut jobs = Vec::new();
    for (i, row) in csv.deserialize::<JobRow>().enumerate() {
        let record = i + 1;
        let job: Job = row.map_err(|e| LoadError::Parse { record, reason: e.to_string() })?.into();
        if let ValidationResult::Invalid(reason) = validate_job(&job) {
            return Err(LoadError::Invalid { record, reason });
        }
        jobs.push(job);
    }
    Ok(jobs)
}

pub fn load_jobs(path: &Path) -> Result<Vec<Job>, LoadError> {
    let file = std::fs::File::open(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_jobs(std::io::BufReader::new(file))
}

/// Writes jobs in the file format read by [`parse_jobs`]. Floats use the
/// shortest representation that round-trips.
pub fn write_jobs<W: Write>(writer: W, jobs: &[Job]) -> csv::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(JOB_FILE_HEADER)?;
    for job in jobs {
        let r = JobRow::from(job);
        csv.write_record([
            r.id.to_string(),
            r.arrival.to_string(),
            r.due.to_string(),
            r.exec.to_string(),
            r.prep.to_string(),
            r.pn.to_string(),
            r.mem.to_string(),
            r.storage.to_string(),
            r.order_amount.to_string(),
            r.relationship.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
