//! Fixtures shared by the benchmarks.

use bizsched_core::workload::generate_jobs;
use bizsched_core::{Job, SimConfig};

/// Default scenario and its generated workload.
pub fn default_scenario(num_vms: u32) -> (SimConfig, Vec<Job>) {
    let mut config = SimConfig::default();
    config.simulation.num_vms = num_vms;
    let jobs = generate_jobs(&config.workload, &config.catalog, config.seed).expect("default workload is valid");
    (config, jobs)
}
