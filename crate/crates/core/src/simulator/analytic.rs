use serde::{Deserialize, Serialize};

use crate::queueing::{mg1_waiting, Mg1Class, Mg1Error};
use crate::simulator::report::SimReport;

/// Completed jobs required per class before a comparison is meaningful.
pub const MIN_SAMPLES_PER_CLASS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] Mg1Error),
    #[error("report has {report} classes but {inputs} analytic inputs were given")]
    ClassMismatch { report: usize, inputs: usize },
    #[error("class {class}: {completed} completed jobs, need at least {required}")]
    InsufficientSamples { class: u32, completed: usize, required: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComparison {
    pub class: u32,
    pub simulated: f64,
    pub analytic: f64,
    /// `None` when the analytic delay is zero.
    pub relative_error: Option<f64>,
}

/// Relative error of each class's simulated mean queueing delay against
/// the non-preemptive M/G/1 prediction.
pub fn compare_analytic(report: &SimReport, inputs: &[Mg1Class]) -> Result<Vec<ClassComparison>, AnalyticError> {
    if report.classes.len() != inputs.len() {
        return Err(AnalyticError::ClassMismatch { report: report.classes.len(), inputs: inputs.len() });
    }
    let analytic = mg1_waiting(inputs)?;
    report
        .classes
        .iter()
        .zip(analytic)
        .map(|(stats, w)| {
            if stats.completed < MIN_SAMPLES_PER_CLASS {
                return Err(AnalyticError::InsufficientSamples {
                    class: stats.class,
                    completed: stats.completed,
                    required: MIN_SAMPLES_PER_CLASS,
                });
            }
            let simulated = stats.mean_wait.unwrap_or(0.0);
            Ok(ClassComparison {
                class: stats.class,
                simulated,
                analytic: w,
                relative_error: (w > 0.0).then(|| (simulated - w).abs() / w),
            })
        })
        .collect()
}
