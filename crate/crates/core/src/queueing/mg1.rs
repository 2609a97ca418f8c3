use serde::{Deserialize, Serialize};

/// Arrival rate and service-time moments of one priority class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mg1Class {
    pub arrival_rate: f64,
    pub mean_service: f64,
    pub second_moment: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Mg1Error {
    #[error("unstable: utilization {utilization}")]
    Unstable { utilization: f64 },
    #[error("class {class}: rates and moments must be finite and >= 0")]
    InvalidClass { class: usize },
    #[error("no classes given")]
    Empty,
}

/// Mean queueing delay per class in a non-preemptive priority M/G/1 queue,
/// class 1 served first:
///
/// `W_i = R / ((1 - s_{i-1}) (1 - s_i))`, `R = 1/2 * sum_j lambda_j E[S_j^2]`,
/// where `s_i` is the cumulative utilization of classes `1..=i`.
pub fn mg1_waiting(classes: &[Mg1Class]) -> Result<Vec<f64>, Mg1Error> {
    if classes.is_empty() {
        return Err(Mg1Error::Empty);
    }
    for (i, c) in classes.iter().enumerate() {
        let ok = [c.arrival_rate, c.mean_service, c.second_moment].iter().all(|v| *v >= 0.0 && v.is_finite());
        if !ok {
            return Err(Mg1Error::InvalidClass { class: i + 1 });
        }
    }
    let utilization: f64 = classes.iter().map(|c| c.arrival_rate * c.mean_service).sum();
    if utilization >= 1.0 {
        return Err(Mg1Error::Unstable { utilization });
    }
    let residual = 0.5 * classes.iter().map(|c| c.arrival_rate * c.second_moment).sum::<f64>();
    let mut above = 0.0;
    Ok(classes
        .iter()
        .map(|c| {
            let through = above + c.arrival_rate * c.mean_service;
            let w = residual / ((1.0 - above) * (1.0 - through));
            above = through;
            w
        })
        .collect())
}
