//! Priority algebra: start time, resource-demand weight, technical and
//! business priority, the threshold-gated resultant score, the score/rank
//! bridge, chain ordering and tolerance feasibility.
//!
//! Two scales coexist. Scores live in `[0, 100]` with higher being better.
//! Ranks live in `[1, 100]` with 1 being best. [`score_to_rank`] maps one to
//! the other.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::domain::{BusinessProfile, ChainKey, ConfigViolation, Job, ResourceDemand};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PriorityError {
    #[error("normalization window contains no jobs")]
    EmptyWindow,
}

/// How the tolerance time of a job is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceFormula {
    /// `exec + prep`; delivery time taken as zero.
    #[default]
    ExecutionOnly,
    /// `due + exec + prep`, the literal three-term sum. Always exceeds the
    /// due time, so every job classifies as infeasible under it.
    WithDue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorityEngineConfig {
    /// Technical score above which the business boost applies.
    pub beta: f64,
    pub w_urgency: f64,
    pub w_demand: f64,
    /// Normalizer for the order amount.
    pub a0: f64,
    /// Normalizer for the relationship score.
    pub b0: f64,
    pub bp_cap: f64,
    /// Static blank time in seconds, added to any allocator feedback.
    pub blank_time: f64,
    /// Length of a classification epoch in seconds.
    pub epoch: f64,
    pub slack_factor: f64,
    pub tolerance: ToleranceFormula,
}

/// Default maximum order amount; `a0 = bp_cap / DEFAULT_MAX_ORDER`.
pub const DEFAULT_MAX_ORDER: f64 = 1000.0;

impl Default for PriorityEngineConfig {
    fn default() -> Self {
        Self {
            beta: 60.0,
            w_urgency: 0.7,
            w_demand: 0.3,
            a0: 10.0 / DEFAULT_MAX_ORDER,
            b0: 0.0,
            bp_cap: 10.0,
            blank_time: 0.0,
            epoch: 60.0,
            slack_factor: 0.9,
            tolerance: ToleranceFormula::ExecutionOnly,
        }
    }
}

impl PriorityEngineConfig {
    pub fn validate(&self) -> Result<(), ConfigViolation> {
        if !(0.0..=100.0).contains(&self.beta) {
            return Err(ConfigViolation::new("beta", "beta must be in [0,100]"));
        }
        if !(self.w_urgency >= 0.0 && self.w_demand >= 0.0) {
            return Err(ConfigViolation::new("w_urgency", "weights must be >= 0"));
        }
        if ((self.w_urgency + self.w_demand) - 1.0).abs() > 1e-9 {
            return Err(ConfigViolation::new(
                "w_urgency",
                format!("w_urgency + w_demand must equal 1 (got {} + {})", self.w_urgency, self.w_demand),
            ));
        }
        if !(self.a0 >= 0.0 && self.a0.is_finite()) {
            return Err(ConfigViolation::new("a0", "a0 must be >= 0"));
        }
        if !(self.b0 >= 0.0 && self.b0.is_finite()) {
            return Err(ConfigViolation::new("b0", "b0 must be >= 0"));
        }
        if !(self.bp_cap >= 0.0 && self.bp_cap.is_finite()) {
            return Err(ConfigViolation::new("bp_cap", "bp_cap must be >= 0"));
        }
        if !(self.blank_time >= 0.0 && self.blank_time.is_finite()) {
            return Err(ConfigViolation::new("blank_time", "blank_time must be >= 0"));
        }
        if !(self.epoch > 0.0 && self.epoch.is_finite()) {
            return Err(ConfigViolation::new("epoch", "epoch must be > 0"));
        }
        if !(self.slack_factor > 0.0 && self.slack_factor <= 1.0) {
            return Err(ConfigViolation::new("slack_factor", "slack_factor must be in (0,1]"));
        }
        Ok(())
    }
}

/// Latest start offset from arrival: `due - exec - prep - blank`.
pub fn compute_start_time(job: &Job, blank_time: f64) -> f64 {
    job.due_time - job.exec_time - job.prep_time - blank_time
}

pub fn demand_weight(demand: &ResourceDemand) -> f64 {
    f64::from(demand.processors) + demand.memory + demand.storage
}

/// Normalization statistics for one classification epoch.
///
/// Urgency is normalized over the absolute start deadlines
/// (`arrival + start offset`) of the jobs in the window, so the job that
/// must start earliest on the simulation clock is the most urgent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub count: usize,
    pub earliest_start: f64,
    pub latest_start: f64,
    pub max_demand_weight: f64,
}

impl WindowStats {
    pub fn from_jobs<'a, I>(jobs: I, blank_time: f64) -> Result<Self, PriorityError>
    where
        I: IntoIterator<Item = &'a Job>,
    {
        let mut stats: Option<WindowStats> = None;
        for job in jobs {
            let start = job.arrival_time + compute_start_time(job, blank_time);
            let weight = demand_weight(&job.demand);
            stats = Some(match stats {
                None => WindowStats { count: 1, earliest_start: start, latest_start: start, max_demand_weight: weight },
                Some(s) => WindowStats {
                    count: s.count + 1,
                    earliest_start: s.earliest_start.min(start),
                    latest_start: s.latest_start.max(start),
                    max_demand_weight: s.max_demand_weight.max(weight),
                },
            });
        }
        stats.ok_or(PriorityError::EmptyWindow)
    }

    /// The same window with every start deadline moved `extra_blank`
    /// seconds earlier, as if the extra blank time applied to all members.
    pub fn shifted(&self, extra_blank: f64) -> Self {
        Self {
            earliest_start: self.earliest_start - extra_blank,
            latest_start: self.latest_start - extra_blank,
            ..*self
        }
    }

    fn urgency(&self, start_deadline: f64) -> f64 {
        let spread = self.latest_start - self.earliest_start;
        if self.count <= 1 || spread <= 0.0 {
            return 1.0;
        }
        ((self.latest_start - start_deadline) / spread).clamp(0.0, 1.0)
    }

    fn demand_share(&self, weight: f64) -> f64 {
        if self.max_demand_weight <= 0.0 {
            return 1.0;
        }
        (weight / self.max_demand_weight).clamp(0.0, 1.0)
    }
}

/// Technical score of a job against its epoch window, using the
/// configured static blank time.
pub fn technical_priority(job: &Job, window: &WindowStats, cfg: &PriorityEngineConfig) -> Result<f64, PriorityError> {
    let start = job.arrival_time + compute_start_time(job, cfg.blank_time);
    technical_priority_at(start, demand_weight(&job.demand), window, cfg)
}

/// Technical score from an absolute start deadline and a demand weight.
pub fn technical_priority_at(
    start_deadline: f64,
    demand_weight: f64,
    window: &WindowStats,
    cfg: &PriorityEngineConfig,
) -> Result<f64, PriorityError> {
    if window.count == 0 {
        return Err(PriorityError::EmptyWindow);
    }
    let blend = cfg.w_urgency * window.urgency(start_deadline) + cfg.w_demand * window.demand_share(demand_weight);
    Ok((100.0 * blend).round().clamp(0.0, 100.0))
}

/// Business boost, capped at `bp_cap`.
pub fn business_priority(business: &BusinessProfile, cfg: &PriorityEngineConfig) -> f64 {
    (cfg.a0 * business.order_amount + cfg.b0 * business.relationship).min(cfg.bp_cap).max(0.0)
}

/// Applies the business boost only when the technical score exceeds the
/// threshold; at or below it, the job keeps its native score.
pub fn resultant_priority(tp: f64, bp: f64, cfg: &PriorityEngineConfig) -> f64 {
    if tp > cfg.beta {
        (tp + bp).min(100.0)
    } else {
        tp
    }
}

/// Per-job satisfaction level. Identity on the score.
pub fn service_level_satisfaction(score: f64) -> f64 {
    score
}

pub fn score_to_rank(score: f64) -> u32 {
    (101.0 - score).round().clamp(1.0, 100.0) as u32
}

/// Inverse image of a rank on the score scale (`101 - rank`).
pub fn rank_to_score(rank: u32) -> f64 {
    101.0 - f64::from(rank)
}

pub fn chain_compare(a: &ChainKey, b: &ChainKey) -> Ordering {
    a.class.cmp(&b.class).then(a.position.cmp(&b.position))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Feasible,
    Tight,
    Infeasible,
}

pub fn tolerance_time(job: &Job, formula: ToleranceFormula) -> f64 {
    let base = job.exec_time + job.prep_time;
    match formula {
        ToleranceFormula::ExecutionOnly => base,
        ToleranceFormula::WithDue => job.due_time + base,
    }
}

pub fn tolerance_check(job: &Job, slack_factor: f64) -> Tolerance {
    tolerance_check_with(job, slack_factor, ToleranceFormula::ExecutionOnly)
}

pub fn tolerance_check_with(job: &Job, slack_factor: f64, formula: ToleranceFormula) -> Tolerance {
    let tolerance = tolerance_time(job, formula);
    if tolerance <= slack_factor * job.due_time {
        Tolerance::Feasible
    } else if tolerance <= job.due_time {
        Tolerance::Tight
    } else {
        Tolerance::Infeasible
    }
}

/// Scores for one job before class assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub t_start: f64,
    pub demand_weight: f64,
    pub tp: f64,
    pub bp: f64,
    pub resultant: f64,
}

impl Scores {
    /// Score that drives ranking in the given mode.
    pub fn effective(&self, mode: crate::domain::PriorityMode) -> f64 {
        match mode {
            crate::domain::PriorityMode::Native => self.tp,
            crate::domain::PriorityMode::Resultant => self.resultant,
        }
    }
}

/// Scores a job against its window. `blank_time` is the total blank time
/// in effect (static plus allocator feedback).
pub fn score_job(
    job: &Job,
    window: &WindowStats,
    blank_time: f64,
    cfg: &PriorityEngineConfig,
) -> Result<Scores, PriorityError> {
    let t_start = compute_start_time(job, blank_time);
    let weight = demand_weight(&job.demand);
    let tp = technical_priority_at(job.arrival_time + t_start, weight, window, cfg)?;
    let bp = business_priority(&job.business, cfg);
    Ok(Scores { t_start, demand_weight: weight, tp, bp, resultant: resultant_priority(tp, bp, cfg) })
}

/// Epoch index of an arrival instant.
pub fn epoch_of(arrival_time: f64, epoch: f64) -> i64 {
    (arrival_time / epoch).floor() as i64
}
