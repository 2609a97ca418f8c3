use bizsched_core::simulator::{
    compare_analytic, read_bundle_rows, replicate_tables, write_band_table, write_bundle, write_job_table,
    AnalyticError, JobStatus, Provenance, ReplicationSettings, BAND_TABLE_HEADER, JOB_TABLE_HEADER,
};
use bizsched_core::workload::generate_jobs;
use bizsched_core::{run, run_paired, Mg1Class, PriorityMode, SimConfig, SimReport};

fn default_jobs(config: &SimConfig) -> Vec<bizsched_core::Job> {
    generate_jobs(&config.workload, &config.catalog, config.seed).unwrap()
}

fn non_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] <= w[1])
}

#[test]
fn replication_bundle_has_every_series() {
    let config = SimConfig::default();
    let bundle = replicate_tables(&config, &ReplicationSettings::default()).unwrap();
    assert_eq!(bundle.lookup("tableII", "72"), Some(82.0));
    assert_eq!(bundle.lookup("band", "51-60"), Some(0.7));
    assert_eq!(bundle.lookup("native", "10"), Some(4.0));
    assert_eq!(bundle.lookup("resultant", "98"), Some(20.0));
    for name in [
        "sim_nominal_native_wait",
        "sim_nominal_resultant_wait",
        "sim_contended_native_wait",
        "sim_contended_resultant_wait",
        "sim_contended_native_class_wait",
        "sim_contended_resultant_class_wait",
    ] {
        let rows: Vec<_> = bundle.series(name).collect();
        assert!(!rows.is_empty(), "{name} missing");
        assert!(rows.iter().all(|r| r.provenance == Provenance::Simulated && r.y >= 0.0));
    }
    assert!(bundle.series("tableII").all(|r| r.provenance == Provenance::PaperModel));
}

#[test]
fn simulated_class_wait_non_decreasing() {
    for seed in 1..=4 {
        let config = SimConfig { seed, ..SimConfig::default() };
        let bundle = replicate_tables(&config, &ReplicationSettings::default()).unwrap();
        for name in ["sim_contended_native_class_wait", "sim_contended_resultant_class_wait"] {
            let waits: Vec<f64> = bundle.series(name).map(|r| r.y).collect();
            assert_eq!(waits.len(), config.num_classes(), "seed {seed} {name}");
            assert!(non_decreasing(&waits), "seed {seed} {name}: {waits:?}");
        }
    }
}

#[test]
fn contended_waits_reach_hours() {
    let bundle = replicate_tables(&SimConfig::default(), &ReplicationSettings::default()).unwrap();
    let worst = bundle.series("sim_contended_native_wait").map(|r| r.y).fold(0.0, f64::max);
    assert!(worst > 1.0, "worst decade wait {worst} h");
    let first = bundle.lookup("sim_contended_native_wait", "1-10").unwrap();
    assert!(first < worst);
}

#[test]
fn bundle_file_round_trips() {
    let bundle = replicate_tables(&SimConfig::default(), &ReplicationSettings { contended_vms: 300 }).unwrap();
    let mut buf = Vec::new();
    write_bundle(&mut buf, &bundle).unwrap();
    assert_eq!(read_bundle_rows(buf.as_slice()).unwrap(), bundle.rows);
}

#[test]
fn paired_defaults_hold_headline_property() {
    let config = SimConfig::default();
    let jobs = default_jobs(&config);
    let paired = run_paired(&config, &jobs).unwrap();
    let c = &paired.comparison;
    assert!(c.boosted_jobs > 0);
    assert!(c.rank_never_worse(), "{:?}", c.rank_regressions);
    assert!(c.boosted_wait_not_increased());
    for report in [&paired.native, &paired.resultant] {
        assert_eq!(report.counters.completed as usize, jobs.len());
        assert!(report.utilization <= 1.0);
        assert_eq!(report.checks.conservation_violations, 0);
    }
}

#[test]
fn paired_runs_match_separate_runs() {
    let config = SimConfig { seed: 9, ..SimConfig::default() };
    let jobs = default_jobs(&config);
    let paired = run_paired(&config, &jobs).unwrap();
    assert_eq!(paired.native, run(&config, &jobs, PriorityMode::Native).unwrap());
    assert_eq!(paired.resultant, run(&config, &jobs, PriorityMode::Resultant).unwrap());
}

#[test]
fn report_json_round_trips() {
    let config = SimConfig::default();
    let report = run(&config, &default_jobs(&config), PriorityMode::Resultant).unwrap();
    let text = report.to_json().unwrap();
    let back = SimReport::from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn flat_tables_have_fixed_headers() {
    let config = SimConfig::default();
    let report = run(&config, &default_jobs(&config), PriorityMode::Native).unwrap();

    let mut jobs_csv = Vec::new();
    write_job_table(&mut jobs_csv, &report).unwrap();
    let mut reader = csv::Reader::from_reader(jobs_csv.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), JOB_TABLE_HEADER);
    assert_eq!(reader.records().count(), report.jobs.len());

    let mut bands_csv = Vec::new();
    write_band_table(&mut bands_csv, &report).unwrap();
    let mut reader = csv::Reader::from_reader(bands_csv.as_slice());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), BAND_TABLE_HEADER);
    assert_eq!(reader.records().count(), 10);
}

#[test]
fn causality_holds_for_every_job() {
    let mut config = SimConfig::default();
    config.simulation.num_vms = 50;
    let report = run(&config, &default_jobs(&config), PriorityMode::Resultant).unwrap();
    for job in report.jobs.iter().filter(|j| j.status == JobStatus::Completed) {
        let (ack, alloc, start, done) =
            (job.ack.unwrap(), job.allocation.unwrap(), job.start.unwrap(), job.completion.unwrap());
        assert!(job.arrival <= ack && ack <= alloc && alloc <= start && start <= done, "job {:?}", job.id);
        assert!(job.wait.unwrap() >= 0.0);
    }
}

#[test]
fn analytic_comparison_needs_samples() {
    let config = SimConfig::default();
    let report = run(&config, &default_jobs(&config), PriorityMode::Native).unwrap();
    let class = Mg1Class { arrival_rate: 0.1, mean_service: 1.0, second_moment: 2.0 };
    let err = compare_analytic(&report, &[class; 6]).unwrap_err();
    assert!(matches!(err, AnalyticError::InsufficientSamples { required: 10_000, .. }), "{err}");
    let err = compare_analytic(&report, &[class; 2]).unwrap_err();
    assert_eq!(err, AnalyticError::ClassMismatch { report: 6, inputs: 2 });
}
