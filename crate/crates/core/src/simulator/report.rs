use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::{JobId, PriorityMode, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qos {
    Good,
    Poor,
}

/// Good when the job completes on or before its deadline.
pub fn deadline_qos(arrival: f64, due_time: f64, completion: f64) -> Qos {
    if completion <= arrival + due_time {
        Qos::Good
    } else {
        Qos::Poor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Completed,
    Rejected,
    Stuck,
}

/// Lifecycle and scores of one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: JobId,
    pub arrival: f64,
    pub due_time: f64,
    pub ack: Option<f64>,
    pub allocation: Option<f64>,
    pub start: Option<f64>,
    pub completion: Option<f64>,
    /// Service start minus arrival.
    pub wait: Option<f64>,
    pub t_start: f64,
    pub demand_weight: f64,
    pub tp: f64,
    pub bp: f64,
    pub resultant: f64,
    /// Score that drove ranking in this run's mode.
    pub score: f64,
    pub rank: u32,
    pub class: u32,
    pub position: u64,
    pub instance: Option<String>,
    pub retries: u64,
    pub qos: Option<Qos>,
    pub status: JobStatus,
    pub reason: Option<String>,
}

impl JobRecord {
    pub(crate) fn pending(id: JobId, arrival: f64, due_time: f64) -> Self {
        Self {
            id,
            arrival,
            due_time,
            ack: None,
            allocation: None,
            start: None,
            completion: None,
            wait: None,
            t_start: 0.0,
            demand_weight: 0.0,
            tp: 0.0,
            bp: 0.0,
            resultant: 0.0,
            score: 0.0,
            rank: 0,
            class: 0,
            position: 0,
            instance: None,
            retries: 0,
            qos: None,
            status: JobStatus::Pending,
            reason: None,
        }
    }

    pub fn is_completed(&self) -> bool {
        self.status == JobStatus::Completed
    }
}

/// Waiting statistics for a decade of ranks (1-10, 11-20, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub lo: u32,
    pub hi: u32,
    pub completed: usize,
    pub mean_wait: Option<f64>,
    pub deadline_hit_rate: Option<f64>,
}

impl BandStats {
    pub fn label(&self) -> String {
        format!("{}-{}", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: u32,
    /// Nominal service rate of the queue.
    pub service_rate: f64,
    /// Mean satisfaction level of the jobs placed in the class.
    pub mean_sls: Option<f64>,
    pub admitted: usize,
    pub completed: usize,
    pub mean_wait: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Queue growth crossed the configured bound; the report is partial.
    Unstable(String),
    /// A job exceeded its retry budget; the report is partial.
    Aborted(String),
}

/// Counters behind the conservation check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub collected: u64,
    pub completed: u64,
    pub rejected: u64,
    pub in_system: u64,
}

/// Invariants checked after every processed event.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantChecks {
    pub events: u64,
    /// Events after which collected != completed + rejected + in system.
    pub conservation_violations: u64,
    /// Dispatch passes that left free capacity while jobs were queued.
    pub starvation_violations: u64,
    /// Events delivered out of time order.
    pub ordering_violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: PriorityMode,
    pub seed: u64,
    pub status: RunStatus,
    pub counters: Counters,
    pub checks: InvariantChecks,
    pub deadline_hit_rate: f64,
    pub utilization: f64,
    /// Dollars, from instance hourly rates times occupancy.
    pub total_cost: f64,
    pub makespan: f64,
    pub mean_wait: Option<f64>,
    pub bands: Vec<BandStats>,
    pub classes: Vec<ClassStats>,
    pub jobs: Vec<JobRecord>,
    pub config: SimConfig,
}

impl SimReport {
    pub fn is_unstable(&self) -> bool {
        !matches!(self.status, RunStatus::Completed)
    }

    pub fn job(&self, id: JobId) -> Option<&JobRecord> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const JOB_TABLE_HEADER: [&str; 17] = [
    "id",
    "arrival",
    "ack",
    "allocation",
    "start",
    "completion",
    "wait",
    "tp",
    "bp",
    "resultant",
    "score",
    "rank",
    "class",
    "position",
    "instance",
    "deadline_met",
    "status",
];

/// One row per job.
pub fn write_job_table<W: Write>(writer: W, report: &SimReport) -> csv::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(JOB_TABLE_HEADER)?;
    for j in &report.jobs {
        let status =
            serde_json::to_value(j.status).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        csv.write_record([
            j.id.to_string(),
            j.arrival.to_string(),
            opt(j.ack),
            opt(j.allocation),
            opt(j.start),
            opt(j.completion),
            opt(j.wait),
            j.tp.to_string(),
            j.bp.to_string(),
            j.resultant.to_string(),
            j.score.to_string(),
            j.rank.to_string(),
            j.class.to_string(),
            j.position.to_string(),
            j.instance.clone().unwrap_or_default(),
            j.qos.map(|q| (q == Qos::Good).to_string()).unwrap_or_default(),
            status,
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub const BAND_TABLE_HEADER: [&str; 5] = ["band", "completed", "mean_wait_s", "mean_wait_h", "deadline_hit_rate"];

/// One row per rank decade.
pub fn write_band_table<W: Write>(writer: W, report: &SimReport) -> csv::Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    csv.write_record(BAND_TABLE_HEADER)?;
    for b in &report.bands {
        csv.write_record([
            b.label(),
            b.completed.to_string(),
            opt(b.mean_wait),
            opt(b.mean_wait.map(|w| w / 3600.0)),
            opt(b.deadline_hit_rate),
        ])?;
    }
    csv.flush()?;
    Ok(())
}
