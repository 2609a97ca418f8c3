use std::path::Path;

use bizsched_core::queueing::{mg1_waiting, Mg1Error};
use bizsched_core::simulator::{
    compare_analytic, replicate_tables, write_band_table, write_bundle, write_job_table, PairedComparison,
};
use bizsched_core::workload::{generate_jobs, load_jobs, write_jobs, LoadError};
use bizsched_core::{run_paired, Job, SimReport};
use serde::Serialize;

use crate::args::{Cli, Command, Format};
use crate::config::{parse_config, LoadedConfig};
use crate::output::Outputs;
use crate::CliError;

/// Name of the effective-config echo written next to every command's output.
pub const CONFIG_ECHO: &str = "config.toml";

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let loaded = load(cli)?;
    if cli.print_config {
        print!("{}", loaded.file.to_toml());
        return Ok(());
    }
    let Some(command) = &cli.command else {
        return Err(CliError::Other("no command given; see --help".into()));
    };
    for line in &loaded.defaults {
        eprintln!("default {line}");
    }
    let mut outputs = Outputs::default();
    outputs.add(CONFIG_ECHO, loaded.file.to_toml().into_bytes());
    match command {
        Command::Generate => cmd_generate(&loaded, cli.format, outputs, &cli.out),
        Command::Simulate { jobs } => cmd_simulate(&loaded, jobs.as_deref(), cli.format, outputs, &cli.out),
        Command::Analyze { report } => cmd_analyze(&loaded, report.as_deref(), cli.format, outputs, &cli.out),
        Command::Replicate => cmd_replicate(&loaded, cli.format, outputs, &cli.out),
    }
}

fn load(cli: &Cli) -> Result<LoadedConfig, CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    Ok(parse_config(&text, cli.seed)?)
}

fn commit(outputs: Outputs, out: &Path) -> Result<(), CliError> {
    for path in outputs.commit(out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("in-memory CSV write");
    buf
}

pub fn cmd_generate(loaded: &LoadedConfig, format: Format, mut outputs: Outputs, out: &Path) -> Result<(), CliError> {
    let cfg = loaded.file.sim_config();
    let jobs = generate_jobs(&cfg.workload, &cfg.catalog, cfg.seed).map_err(|e| CliError::Other(e.to_string()))?;
    match format {
        Format::Csv => outputs.add("jobs.csv", csv_bytes(|b| write_jobs(b, &jobs))),
        Format::Json => outputs.add_json("jobs.json", &jobs),
    }
    println!("generated {} jobs (lambda {} jobs/s, seed {})", jobs.len(), cfg.workload.arrival_rate, cfg.seed);
    commit(outputs, out)
}

/// Reads a job file, JSON when the extension is `.json`, CSV otherwise.
pub fn read_jobs(path: &Path) -> Result<Vec<Job>, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Input { path: path.into(), reason: e.to_string() });
    }
    load_jobs(path).map_err(|e| match e {
        LoadError::Io { source, .. } => CliError::io(path, source),
        other => CliError::Input { path: path.into(), reason: other.to_string() },
    })
}

fn comparison_rows(c: &PairedComparison) -> Vec<(&'static str, String)> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        ("boosted_jobs", c.boosted_jobs.to_string()),
        ("rank_regressions", c.rank_regressions.len().to_string()),
        ("boosted_mean_wait_native", opt(c.boosted_mean_wait_native)),
        ("boosted_mean_wait_resultant", opt(c.boosted_mean_wait_resultant)),
        ("native_mean_wait", opt(c.native_mean_wait)),
        ("resultant_mean_wait", opt(c.resultant_mean_wait)),
        ("rank_never_worse", c.rank_never_worse().to_string()),
        ("boosted_wait_not_increased", c.boosted_wait_not_increased().to_string()),
    ]
}

pub fn cmd_simulate(
    loaded: &LoadedConfig,
    jobs_path: Option<&Path>,
    format: Format,
    mut outputs: Outputs,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = loaded.file.sim_config();
    let jobs = match jobs_path {
        Some(path) => read_jobs(path)?,
        None => generate_jobs(&cfg.workload, &cfg.catalog, cfg.seed).map_err(|e| CliError::Other(e.to_string()))?,
    };
    let paired = run_paired(&cfg, &jobs).map_err(|e| CliError::Other(e.to_string()))?;

    for report in [&paired.native, &paired.resultant] {
        let mode = report.mode.label();
        outputs.add(&format!("{mode}_report.json"), report.to_json().expect("report serializes").into_bytes());
        if format == Format::Csv {
            outputs.add(&format!("{mode}_jobs.csv"), csv_bytes(|b| write_job_table(b, report)));
            outputs.add(&format!("{mode}_bands.csv"), csv_bytes(|b| write_band_table(b, report)));
        }
        println!(
            "{mode}: {} of {} completed, mean wait {} s, deadline hit rate {}, utilization {}, cost ${}",
            report.counters.completed,
            report.counters.collected,
            report.mean_wait.map_or("n/a".into(), |w| w.to_string()),
            report.deadline_hit_rate,
            report.utilization,
            report.total_cost
        );
    }
    let c = &paired.comparison;
    match format {
        Format::Csv => {
            let rows = comparison_rows(c);
            outputs.add(
                "comparison.csv",
                csv_bytes(|b| {
                    let mut w = csv::Writer::from_writer(b);
                    w.write_record(["metric", "value"])?;
                    for (k, v) in &rows {
                        w.write_record([*k, v.as_str()])?;
                    }
                    w.flush()?;
                    Ok(())
                }),
            );
        }
        Format::Json => outputs.add_json("comparison.json", c),
    }
    println!(
        "boosted jobs: {}, rank regressions: {}, boosted mean wait native {} s vs resultant {} s",
        c.boosted_jobs,
        c.rank_regressions.len(),
        c.boosted_mean_wait_native.map_or("n/a".into(), |w| w.to_string()),
        c.boosted_mean_wait_resultant.map_or("n/a".into(), |w| w.to_string()),
    );
    commit(outputs, out)?;

    let unstable: Vec<String> = [&paired.native, &paired.resultant]
        .iter()
        .filter(|r| r.is_unstable())
        .map(|r| format!("{} run {:?}", r.mode.label(), r.status))
        .collect();
    if unstable.is_empty() {
        Ok(())
    } else {
        Err(CliError::Unstable(format!("unstable: partial output written; {}", unstable.join("; "))))
    }
}

#[derive(Debug, Serialize)]
struct AnalysisRow {
    class: usize,
    arrival_rate: f64,
    mean_service: f64,
    second_moment: f64,
    analytic_wait: f64,
    simulated_wait: Option<f64>,
    relative_error: Option<f64>,
}

pub const ANALYSIS_HEADER: [&str; 7] =
    ["class", "arrival_rate", "mean_service", "second_moment", "analytic_wait", "simulated_wait", "relative_error"];

pub fn cmd_analyze(
    loaded: &LoadedConfig,
    report_path: Option<&Path>,
    format: Format,
    mut outputs: Outputs,
    out: &Path,
) -> Result<(), CliError> {
    let classes = &loaded.file.analysis.classes;
    let waits = mg1_waiting(classes).map_err(|e| match e {
        Mg1Error::Unstable { .. } => CliError::Unstable(e.to_string()),
        other => CliError::Other(other.to_string()),
    })?;
    let mut rows: Vec<AnalysisRow> = classes
        .iter()
        .zip(&waits)
        .enumerate()
        .map(|(i, (c, w))| AnalysisRow {
            class: i + 1,
            arrival_rate: c.arrival_rate,
            mean_service: c.mean_service,
            second_moment: c.second_moment,
            analytic_wait: *w,
            simulated_wait: None,
            relative_error: None,
        })
        .collect();

    if let Some(path) = report_path {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let report =
            SimReport::from_json(&text).map_err(|e| CliError::Input { path: path.into(), reason: e.to_string() })?;
        let comparison = compare_analytic(&report, classes).map_err(|e| CliError::Other(e.to_string()))?;
        for (row, c) in rows.iter_mut().zip(comparison) {
            row.simulated_wait = Some(c.simulated);
            row.relative_error = c.relative_error;
        }
    }

    for row in &rows {
        let mut line = format!("class {}: W = {}", row.class, row.analytic_wait);
        if let (Some(sim), Some(err)) = (row.simulated_wait, row.relative_error) {
            line.push_str(&format!(", simulated {sim}, relative error {err}"));
        }
        println!("{line}");
    }
    match format {
        Format::Csv => outputs.add(
            "analysis.csv",
            csv_bytes(|b| {
                let mut w = csv::Writer::from_writer(b);
                for row in &rows {
                    w.serialize(row)?;
                }
                w.flush()?;
                Ok(())
            }),
        ),
        Format::Json => outputs.add_json("analysis.json", &rows),
    }
    commit(outputs, out)
}

pub fn cmd_replicate(loaded: &LoadedConfig, format: Format, mut outputs: Outputs, out: &Path) -> Result<(), CliError> {
    let cfg = loaded.file.sim_config();
    let bundle = replicate_tables(&cfg, &loaded.file.replication).map_err(|e| CliError::Other(e.to_string()))?;
    match format {
        Format::Csv => outputs.add("replication.csv", csv_bytes(|b| write_bundle(b, &bundle))),
        Format::Json => outputs.add_json("replication.json", &bundle),
    }
    for note in &bundle.notes {
        println!("note: {note}");
    }
    println!("{} rows", bundle.rows.len());
    commit(outputs, out)
}
