//! Single-writer discrete-event loop.
//!
//! Lifecycle of a job: `Arrival` (acknowledge, score, classify, enqueue)
//! then zero or more passes through the allocation gate. A refused job
//! leaves its queue and re-enters at the same chain position on its
//! `RetryAllocation` event. A granted job gets `ServiceStart` at the grant
//! instant and holds its instance for `prep + exec` seconds until
//! `Completion`. Service is never interrupted.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ClassPolicy, ConfigViolation, Job, JobId, PriorityMode, SimConfig};
use crate::priority::{epoch_of, score_job, score_to_rank, service_level_satisfaction, WindowStats};
use crate::queueing::{
    class_index, collect, AllocationOutcome, ClassQueues, ClassificationGate, Instance, ResourcePool,
};
use crate::rng::allocation_stream;
use crate::simulator::report::{
    deadline_qos, mean, BandStats, ClassStats, Counters, InvariantChecks, JobRecord, JobStatus, Qos, RunStatus,
    SimReport,
};
use crate::workload::{thin_classes, WorkloadError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(#[from] ConfigViolation),
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("duplicate job id {0}")]
    DuplicateJobId(JobId),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

/// Event kinds in tie-break precedence order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Completion,
    Arrival,
    RetryAllocation,
    ServiceStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub job: JobId,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.kind.cmp(&other.kind)).then(self.job.cmp(&other.job))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the workload to quiescence under one priority mode.
pub fn run(config: &SimConfig, jobs: &[Job], mode: PriorityMode) -> Result<SimReport, SimError> {
    config.validate()?;
    if jobs.is_empty() {
        return Err(SimError::EmptyWorkload);
    }
    let mut engine = Engine::new(config, jobs, mode)?;
    engine.run();
    Ok(engine.into_report())
}

struct Engine<'a> {
    config: &'a SimConfig,
    jobs: &'a [Job],
    mode: PriorityMode,
    index: HashMap<JobId, usize>,
    windows: BTreeMap<i64, WindowStats>,
    thinned: Option<Vec<u32>>,
    records: Vec<JobRecord>,
    instances: Vec<Option<Instance>>,
    rngs: Vec<Option<ChaCha8Rng>>,
    events: BinaryHeap<Reverse<Event>>,
    queues: ClassQueues,
    gate: ClassificationGate,
    pool: ResourcePool,
    deferred: u64,
    counters: Counters,
    checks: InvariantChecks,
    status: RunStatus,
    clock: f64,
    busy_seconds: f64,
    cost: f64,
}

impl<'a> Engine<'a> {
    fn new(config: &'a SimConfig, jobs: &'a [Job], mode: PriorityMode) -> Result<Self, SimError> {
        let mut index = HashMap::with_capacity(jobs.len());
        for (i, job) in jobs.iter().enumerate() {
            if index.insert(job.id, i).is_some() {
                return Err(SimError::DuplicateJobId(job.id));
            }
        }

        let epoch = config.priority.epoch;
        let mut by_epoch: BTreeMap<i64, Vec<&Job>> = BTreeMap::new();
        for job in jobs.iter().filter(|j| !crate::domain::validate_job(j).is_invalid()) {
            by_epoch.entry(epoch_of(job.arrival_time, epoch)).or_default().push(job);
        }
        let windows = by_epoch
            .into_iter()
            .map(|(k, members)| {
                let stats = WindowStats::from_jobs(members, config.priority.blank_time).expect("non-empty epoch");
                (k, stats)
            })
            .collect();

        let n_classes = config.num_classes() as u32;
        let thinned = match config.simulation.class_policy {
            ClassPolicy::Gate => None,
            ClassPolicy::Thinned => Some(thin_classes(jobs.len(), &config.workload.class_rates, config.seed)?),
        };

        let mut events = BinaryHeap::with_capacity(jobs.len() * 2);
        for job in jobs {
            let time = if job.arrival_time.is_finite() { job.arrival_time } else { 0.0 };
            events.push(Reverse(Event { time, kind: EventKind::Arrival, job: job.id }));
        }

        Ok(Self {
            config,
            jobs,
            mode,
            index,
            windows,
            thinned,
            records: jobs.iter().map(|j| JobRecord::pending(j.id, j.arrival_time, j.due_time)).collect(),
            instances: vec![None; jobs.len()],
            rngs: vec![None; jobs.len()],
            events,
            queues: ClassQueues::new(n_classes, config.simulation.mu_base),
            gate: ClassificationGate::new(n_classes),
            pool: ResourcePool::new(config.simulation.num_vms, config.catalog.clone()),
            deferred: 0,
            counters: Counters::default(),
            checks: InvariantChecks::default(),
            status: RunStatus::Completed,
            clock: 0.0,
            busy_seconds: 0.0,
            cost: 0.0,
        })
    }

    fn run(&mut self) {
        while let Some(Reverse(event)) = self.events.pop() {
            if event.time < self.clock {
                self.checks.ordering_violations += 1;
            }
            self.clock = event.time;
            let idx = self.index[&event.job];
            match event.kind {
                EventKind::Arrival => self.on_arrival(idx),
                EventKind::RetryAllocation => self.on_retry(idx),
                EventKind::ServiceStart => self.on_service_start(idx),
                EventKind::Completion => self.on_completion(idx),
            }
            self.checks.events += 1;
            self.check_conservation();
            if self.status != RunStatus::Completed {
                break;
            }
        }
        if self.status != RunStatus::Completed {
            let reason = match &self.status {
                RunStatus::Unstable(r) | RunStatus::Aborted(r) => r.clone(),
                RunStatus::Completed => unreachable!(),
            };
            for rec in self.records.iter_mut().filter(|r| r.status == JobStatus::Pending) {
                rec.status = JobStatus::Stuck;
                rec.reason.get_or_insert_with(|| format!("run stopped: {reason}"));
            }
        }
    }

    fn schedule(&mut self, time: f64, kind: EventKind, idx: usize) {
        self.events.push(Reverse(Event { time, kind, job: self.jobs[idx].id }));
    }

    fn reject(&mut self, idx: usize, reason: String) {
        self.counters.rejected += 1;
        let rec = &mut self.records[idx];
        rec.status = JobStatus::Rejected;
        rec.reason = Some(reason);
    }

    fn on_arrival(&mut self, idx: usize) {
        let job = &self.jobs[idx];
        self.counters.collected += 1;
        let ack = match collect(job, self.clock) {
            Ok(ack) => ack,
            Err(rejection) => return self.reject(idx, rejection.reason),
        };

        let cfg = &self.config.priority;
        // Allocator feedback delays every job scored now alike, so the
        // window moves with it and urgency stays relative to the epoch.
        let feedback = self.pool.blank_time_feedback();
        let window = self.windows[&epoch_of(job.arrival_time, cfg.epoch)].shifted(feedback);
        let scores = score_job(job, &window, cfg.blank_time + feedback, cfg).expect("window holds the job");
        let score = scores.effective(self.mode);
        let rank = score_to_rank(score);
        let class = match &self.thinned {
            Some(classes) => classes[idx],
            None => class_index(rank, self.gate.n_classes()),
        };
        let chain = self.gate.assign(class);

        let rec = &mut self.records[idx];
        rec.ack = Some(ack.ack_time);
        rec.t_start = scores.t_start;
        rec.demand_weight = scores.demand_weight;
        rec.tp = scores.tp;
        rec.bp = scores.bp;
        rec.resultant = scores.resultant;
        rec.score = score;
        rec.rank = rank;
        rec.class = chain.class;
        rec.position = chain.position;

        if self.pool.cheapest_fit(&job.demand).is_none() {
            return self.reject(idx, format!("no catalog entry can host {:?}", job.demand));
        }
        self.counters.in_system += 1;
        self.queues.push(chain, job.id);
        if self.queues.len() > self.config.simulation.max_queue_len {
            self.status = RunStatus::Unstable(format!(
                "queue length {} exceeded bound {} at t={}",
                self.queues.len(),
                self.config.simulation.max_queue_len,
                self.clock
            ));
            return;
        }
        self.dispatch();
    }

    fn on_retry(&mut self, idx: usize) {
        self.deferred -= 1;
        let rec = &self.records[idx];
        let key = crate::domain::ChainKey::new(rec.class, rec.position);
        self.queues.push(key, rec.id);
        self.dispatch();
    }

    fn on_service_start(&mut self, idx: usize) {
        let job = &self.jobs[idx];
        let rec = &mut self.records[idx];
        rec.start = Some(self.clock);
        rec.wait = Some(self.clock - job.arrival_time);
        let occupancy = job.prep_time + job.exec_time;
        self.schedule(self.clock + occupancy, EventKind::Completion, idx);
    }

    fn on_completion(&mut self, idx: usize) {
        let job = &self.jobs[idx];
        let instance = self.instances[idx].take().expect("completing job holds an instance");
        self.pool.release(instance).expect("instance was allocated");
        let occupancy = job.prep_time + job.exec_time;
        self.busy_seconds += occupancy;
        self.cost += self.pool.catalog()[instance.catalog_index].cost * occupancy / 3600.0;

        let rec = &mut self.records[idx];
        rec.completion = Some(self.clock);
        rec.qos = Some(deadline_qos(job.arrival_time, job.due_time, self.clock));
        rec.status = JobStatus::Completed;
        self.counters.completed += 1;
        self.counters.in_system -= 1;
        self.dispatch();
    }

    /// Global scheduler: offers free capacity to queue heads, best class
    /// first, until capacity or queued work runs out.
    fn dispatch(&mut self) {
        let settings = &self.config.simulation;
        while self.pool.has_capacity() {
            let Some((_, id)) = self.queues.pop_best() else { break };
            let idx = self.index[&id];
            let job = &self.jobs[idx];
            let rank = self.records[idx].rank;
            let seed = self.config.seed;
            let rng = self.rngs[idx].get_or_insert_with(|| allocation_stream(seed, id));
            let outcome = self.pool.try_allocate(
                job,
                rank,
                &self.config.allocation_bands,
                rng,
                self.clock,
                settings.retry_interval,
            );
            match outcome {
                Ok(AllocationOutcome::Allocated(instance)) => {
                    self.instances[idx] = Some(instance);
                    self.pool.observe_allocation_delay(self.clock - job.arrival_time);
                    let rec = &mut self.records[idx];
                    rec.allocation = Some(self.clock);
                    rec.instance = Some(self.pool.catalog()[instance.catalog_index].name.clone());
                    self.schedule(self.clock, EventKind::ServiceStart, idx);
                }
                Ok(AllocationOutcome::Deferred { retry_at }) => {
                    let rec = &mut self.records[idx];
                    rec.retries += 1;
                    if rec.retries > settings.max_retries {
                        let reason =
                            format!("job {id} deferred {} times (limit {})", rec.retries, settings.max_retries);
                        rec.reason = Some(reason.clone());
                        self.status = RunStatus::Aborted(reason);
                        self.deferred += 1;
                        return;
                    }
                    self.deferred += 1;
                    self.schedule(retry_at, EventKind::RetryAllocation, idx);
                }
                Err(e) => {
                    self.counters.in_system -= 1;
                    self.reject(idx, e.to_string());
                }
            }
        }
        if self.pool.has_capacity() && !self.queues.is_empty() {
            self.checks.starvation_violations += 1;
        }
    }

    /// Recounts the jobs in the system from the queues, the retry set and
    /// the pool, independently of the running counter.
    fn check_conservation(&mut self) {
        let in_system = self.queues.len() as u64 + self.deferred + u64::from(self.pool.in_use());
        let c = &self.counters;
        if c.collected != c.completed + c.rejected + in_system || in_system != c.in_system {
            self.checks.conservation_violations += 1;
        }
    }

    fn into_report(self) -> SimReport {
        let completed: Vec<&JobRecord> = self.records.iter().filter(|r| r.is_completed()).collect();
        let makespan = self.clock;
        let capacity = f64::from(self.config.simulation.num_vms);
        let utilization = if makespan > 0.0 { self.busy_seconds / (capacity * makespan) } else { 0.0 };
        let hits = completed.iter().filter(|r| r.qos == Some(Qos::Good)).count();
        let deadline_hit_rate = if completed.is_empty() { 0.0 } else { hits as f64 / completed.len() as f64 };

        let bands = (0..10)
            .map(|d| {
                let (lo, hi) = (d * 10 + 1, d * 10 + 10);
                let members: Vec<&&JobRecord> = completed.iter().filter(|r| (lo..=hi).contains(&r.rank)).collect();
                let good = members.iter().filter(|r| r.qos == Some(Qos::Good)).count();
                BandStats {
                    lo,
                    hi,
                    completed: members.len(),
                    mean_wait: mean(members.iter().filter_map(|r| r.wait)),
                    deadline_hit_rate: (!members.is_empty()).then(|| good as f64 / members.len() as f64),
                }
            })
            .collect();

        let classes = self
            .queues
            .classes()
            .iter()
            .map(|q| {
                let admitted: Vec<&JobRecord> =
                    self.records.iter().filter(|r| r.class == q.index && r.ack.is_some()).collect();
                let done: Vec<&&JobRecord> = admitted.iter().filter(|r| r.is_completed()).collect();
                ClassStats {
                    class: q.index,
                    service_rate: q.service_rate,
                    mean_sls: mean(admitted.iter().map(|r| service_level_satisfaction(r.score))),
                    admitted: admitted.len(),
                    completed: done.len(),
                    mean_wait: mean(done.iter().filter_map(|r| r.wait)),
                }
            })
            .collect();

        SimReport {
            mode: self.mode,
            seed: self.config.seed,
            status: self.status,
            counters: self.counters,
            checks: self.checks,
            deadline_hit_rate,
            utilization,
            total_cost: self.cost,
            makespan,
            mean_wait: mean(completed.iter().filter_map(|r| r.wait)),
            bands,
            classes,
            jobs: self.records,
            config: self.config.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{BusinessProfile, ResourceDemand};

    fn table_three_job(id: u64, arrival: f64) -> Job {
        Job {
            id: JobId(id),
            arrival_time: arrival,
            due_time: 700.0,
            exec_time: 650.0,
            prep_time: 5.0,
            demand: ResourceDemand { processors: 1, memory: 1.7, storage: 160.0 },
            business: BusinessProfile { order_amount: 0.0, relationship: 0.0 },
        }
    }

    #[test]
    fn event_precedence() {
        let at = |kind, job| Event { time: 5.0, kind, job: JobId(job) };
        let mut events = [
            at(EventKind::ServiceStart, 1),
            at(EventKind::RetryAllocation, 1),
            at(EventKind::Arrival, 2),
            at(EventKind::Arrival, 1),
            at(EventKind::Completion, 9),
            Event { time: 4.0, kind: EventKind::ServiceStart, job: JobId(9) },
        ];
        events.sort();
        let kinds: Vec<(EventKind, u64)> = events.iter().map(|e| (e.kind, e.job.0)).collect();
        assert_eq!(
            kinds,
            vec![
                (EventKind::ServiceStart, 9),
                (EventKind::Completion, 9),
                (EventKind::Arrival, 1),
                (EventKind::Arrival, 2),
                (EventKind::RetryAllocation, 1),
                (EventKind::ServiceStart, 1),
            ]
        );
    }

    #[test]
    fn single_job_runs_uncontended() {
        let report = run(&SimConfig::default(), &[table_three_job(1, 3.0)], PriorityMode::Resultant).unwrap();
        let rec = &report.jobs[0];
        assert_eq!(report.status, RunStatus::Completed);
        assert_eq!(rec.wait, Some(0.0));
        assert_eq!(rec.t_start, 45.0);
        assert_eq!(rec.rank, 1);
        assert_eq!(rec.completion, Some(658.0));
        assert_eq!(rec.qos, Some(Qos::Good));
        assert_eq!(rec.instance.as_deref(), Some("m1.small"));
        assert!((report.total_cost - 0.1 * 655.0 / 3600.0).abs() < 1e-12);
    }

    #[test]
    fn one_vm_serializes_identical_jobs() {
        let mut cfg = SimConfig::default();
        cfg.simulation.num_vms = 1;
        let jobs = [table_three_job(1, 0.0), table_three_job(2, 0.0)];
        let report = run(&cfg, &jobs, PriorityMode::Native).unwrap();
        let first = report.jobs.iter().min_by(|a, b| a.start.partial_cmp(&b.start).unwrap()).unwrap();
        let second = report.jobs.iter().find(|r| r.id != first.id).unwrap();
        assert!(second.wait.unwrap() >= 655.0, "{:?}", second.wait);
        assert_eq!(second.qos, Some(Qos::Poor));
        assert!(report.utilization <= 1.0);
    }

    #[test]
    fn invalid_and_unsatisfiable_jobs_are_rejected() {
        let mut bad = table_three_job(2, 1.0);
        bad.exec_time = 0.0;
        let mut huge = table_three_job(3, 2.0);
        huge.demand = ResourceDemand { processors: 16, memory: 64.0, storage: 5000.0 };
        let report =
            run(&SimConfig::default(), &[table_three_job(1, 0.0), bad, huge], PriorityMode::Resultant).unwrap();
        assert_eq!(report.counters.collected, 3);
        assert_eq!(report.counters.rejected, 2);
        assert_eq!(report.counters.completed, 1);
        assert_eq!(report.job(JobId(2)).unwrap().reason.as_deref(), Some("exec_time must be > 0"));
        assert_eq!(report.job(JobId(3)).unwrap().status, JobStatus::Rejected);
        assert_eq!(report.checks.conservation_violations, 0);
    }

    #[test]
    fn queue_bound_flags_unstable() {
        let mut cfg = SimConfig::default();
        cfg.simulation.num_vms = 1;
        cfg.simulation.max_queue_len = 3;
        let jobs: Vec<Job> = (1..=10).map(|i| table_three_job(i, i as f64)).collect();
        let report = run(&cfg, &jobs, PriorityMode::Native).unwrap();
        assert!(matches!(report.status, RunStatus::Unstable(_)));
        assert!(report.jobs.iter().any(|r| r.status == JobStatus::Stuck));
    }

    #[test]
    fn retry_budget_aborts() {
        let mut cfg = SimConfig::default();
        cfg.simulation.max_retries = 0;
        cfg.allocation_bands = crate::queueing::AllocationTable::new(vec![crate::queueing::AllocationBand {
            lo: 1,
            hi: 100,
            probability: 1e-9,
        }])
        .unwrap();
        let report = run(&cfg, &[table_three_job(1, 0.0)], PriorityMode::Native).unwrap();
        match &report.status {
            RunStatus::Aborted(reason) => assert!(reason.contains("deferred"), "{reason}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_duplicate_workloads() {
        assert!(matches!(run(&SimConfig::default(), &[], PriorityMode::Native), Err(SimError::EmptyWorkload)));
        let jobs = [table_three_job(1, 0.0), table_three_job(1, 1.0)];
        assert!(matches!(run(&SimConfig::default(), &jobs, PriorityMode::Native), Err(SimError::DuplicateJobId(_))));
    }
}
