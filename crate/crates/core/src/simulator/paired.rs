use serde::{Deserialize, Serialize};

use crate::domain::{Job, JobId, PriorityMode, SimConfig};
use crate::simulator::engine::{run, SimError};
use crate::simulator::report::{mean, SimReport};

/// Effect of the business boost on the jobs it applies to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    /// Jobs scored above the threshold with a positive business boost.
    pub boosted_jobs: usize,
    /// Boosted jobs whose rank under the resultant score is worse than native.
    pub rank_regressions: Vec<JobId>,
    /// Mean wait of boosted jobs completed in both runs.
    pub boosted_mean_wait_native: Option<f64>,
    pub boosted_mean_wait_resultant: Option<f64>,
    pub native_mean_wait: Option<f64>,
    pub resultant_mean_wait: Option<f64>,
}

impl PairedComparison {
    pub fn rank_never_worse(&self) -> bool {
        self.rank_regressions.is_empty()
    }

    pub fn boosted_wait_not_increased(&self) -> bool {
        match (self.boosted_mean_wait_native, self.boosted_mean_wait_resultant) {
            (Some(native), Some(resultant)) => resultant <= native,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRuns {
    pub native: SimReport,
    pub resultant: SimReport,
    pub comparison: PairedComparison,
}

/// Runs the same jobs and seed under native and resultant ranking on two
/// threads. Allocation draws are per job, so the runs share random numbers.
pub fn run_paired(config: &SimConfig, jobs: &[Job]) -> Result<PairedRuns, SimError> {
    let (native, resultant) = std::thread::scope(|s| {
        let native = s.spawn(|| run(config, jobs, PriorityMode::Native));
        let resultant = run(config, jobs, PriorityMode::Resultant);
        (native.join().expect("native run panicked"), resultant)
    });
    let (native, resultant) = (native?, resultant?);
    let comparison = compare_runs(&native, &resultant, config.priority.beta);
    Ok(PairedRuns { native, resultant, comparison })
}

pub fn compare_runs(native: &SimReport, resultant: &SimReport, beta: f64) -> PairedComparison {
    let mut boosted = 0;
    let mut regressions = Vec::new();
    let mut waits = Vec::new();
    for (n, r) in native.jobs.iter().zip(&resultant.jobs) {
        debug_assert_eq!(n.id, r.id);
        if !(r.tp > beta && r.bp > 0.0) || r.ack.is_none() {
            continue;
        }
        boosted += 1;
        if r.rank > n.rank {
            regressions.push(r.id);
        }
        if let (Some(wn), Some(wr)) = (n.wait, r.wait) {
            waits.push((wn, wr));
        }
    }
    PairedComparison {
        boosted_jobs: boosted,
        rank_regressions: regressions,
        boosted_mean_wait_native: mean(waits.iter().map(|w| w.0)),
        boosted_mean_wait_resultant: mean(waits.iter().map(|w| w.1)),
        native_mean_wait: native.mean_wait,
        resultant_mean_wait: resultant.mean_wait,
    }
}
