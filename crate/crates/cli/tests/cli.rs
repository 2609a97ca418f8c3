use std::path::Path;
use std::process::{Command, Output};

use bizsched_core::simulator::{read_bundle_rows, ReplicationBundle};
use bizsched_core::workload::load_jobs;
use bizsched_core::{Job, SimReport};

fn bizsched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bizsched"))
        .current_dir(dir)
        .env_remove("BIZSCHED_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_defaults_writes_2000_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["generate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let jobs = load_jobs(&dir.path().join("out/jobs.csv")).unwrap();
    assert_eq!(jobs.len(), 2000);
    assert!(stdout(&out).contains("generated 2000 jobs (lambda 1 jobs/s, seed 42)"), "{}", stdout(&out));
    assert!(stderr(&out).contains("default priority.beta = 60.0"));
    assert!(stderr(&out).contains("default workload.num_tasks = 2000"));
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = bizsched(dir.path(), &["generate", "--seed", "7", "--out", sub]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let a = std::fs::read(dir.path().join("a/jobs.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/jobs.csv")).unwrap();
    assert_eq!(a, b);
    let other = bizsched(dir.path(), &["generate", "--seed", "8", "--out", "c"]);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(a, std::fs::read(dir.path().join("c/jobs.csv")).unwrap());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bizsched"))
        .current_dir(dir.path())
        .env("BIZSCHED_OUT", "from-env")
        .args(["generate", "--format", "json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("from-env/jobs.json")).unwrap();
    let jobs: Vec<Job> = serde_json::from_str(&text).unwrap();
    assert_eq!(jobs.len(), 2000);
}

#[test]
fn unwritable_output_dir_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "x").unwrap();
    let out = bizsched(dir.path(), &["generate", "--out", "blocker/inner"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("blocker/inner"), "{}", stderr(&out));
}

#[test]
fn simulate_defaults_writes_paired_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let o = dir.path().join("out");
    for name in ["native", "resultant"] {
        let report =
            SimReport::from_json(&std::fs::read_to_string(o.join(format!("{name}_report.json"))).unwrap()).unwrap();
        assert_eq!(report.counters.completed, 2000);
        assert!(o.join(format!("{name}_jobs.csv")).exists());
        assert!(o.join(format!("{name}_bands.csv")).exists());
    }
    let comparison = std::fs::read_to_string(o.join("comparison.csv")).unwrap();
    assert!(comparison.contains("boosted_wait_not_increased,true"), "{comparison}");
    assert!(comparison.contains("rank_never_worse,true"), "{comparison}");
}

#[test]
fn simulate_single_job_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let jobs = "id,arrival,due,exec,prep,pn,mem,storage,order_amount,relationship\n1,3,700,650,5,1,1.7,160,500,50\n";
    std::fs::write(dir.path().join("one.csv"), jobs).unwrap();
    let out = bizsched(dir.path(), &["simulate", "--jobs", "one.csv", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/native_report.json")).unwrap();
    let report = SimReport::from_json(&text).unwrap();
    assert_eq!(report.jobs[0].wait, Some(0.0));
    assert!(dir.path().join("out/comparison.json").exists());
}

#[test]
fn generated_job_files_feed_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[workload]\nnum_tasks = 50\n");
    for (format, file) in [("csv", "jobs.csv"), ("json", "jobs.json")] {
        let out = bizsched(dir.path(), &["--config", &cfg, "--format", format, "generate"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let path = format!("out/{file}");
        let out = bizsched(dir.path(), &["--config", &cfg, "simulate", "--jobs", &path, "--out", "sim"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
}

#[test]
fn missing_job_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["simulate", "--jobs", "absent.csv"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("absent.csv"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unstable_simulation_exits_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[simulation]\nnum_vms = 1\nmax_queue_len = 5\n\n[workload]\nnum_tasks = 100\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "simulate"]);
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
    assert!(stderr(&out).contains("unstable"));
    let report =
        SimReport::from_json(&std::fs::read_to_string(dir.path().join("out/native_report.json")).unwrap()).unwrap();
    assert!(report.is_unstable());
}

#[test]
fn analyze_single_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["analyze"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("class 1: W = 1\n"), "{}", stdout(&out));
    let mut reader = csv::Reader::from_path(dir.path().join("out/analysis.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), bizsched_cli::commands::ANALYSIS_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn analyze_two_classes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[[analysis.classes]]\narrival_rate = 0.2\nmean_service = 1.0\nsecond_moment = 2.0\n\n\
         [[analysis.classes]]\narrival_rate = 0.2\nmean_service = 1.0\nsecond_moment = 2.0\n",
    );
    let out = bizsched(dir.path(), &["--config", &cfg, "--format", "json", "analyze"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/analysis.json")).unwrap();
    let rows: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows[0]["analytic_wait"].as_f64(), Some(0.5));
    assert!((rows[1]["analytic_wait"].as_f64().unwrap() - 0.8333).abs() < 1e-4);
}

#[test]
fn analyze_overloaded_reports_utilization() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write_config(dir.path(), "[[analysis.classes]]\narrival_rate = 1.2\nmean_service = 1.0\nsecond_moment = 2.0\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "analyze"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr(&out).contains("unstable: utilization 1.2"), "{}", stderr(&out));
}

#[test]
fn analyze_rejects_short_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[workload]\nnum_tasks = 20\narrival_rate = 0.5\nclass_rates = [0.5]\n");
    assert_eq!(bizsched(dir.path(), &["--config", &cfg, "simulate"]).status.code(), Some(0));
    let out = bizsched(dir.path(), &["--config", &cfg, "analyze", "--report", "out/native_report.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("need at least 10000"), "{}", stderr(&out));
}

#[test]
fn replicate_emits_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["replicate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/replication.csv")).unwrap();
    assert!(text.starts_with("series,x,y,provenance\n"));
    for needle in ["native,10,4,paper-model", "band,51-60,0.7,paper-model", "tableII,80,90,paper-model"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let rows = read_bundle_rows(text.as_bytes()).unwrap();
    assert!(rows.iter().any(|r| r.series == "sim_contended_native_class_wait"));
}

#[test]
fn replicate_json_bundle_parses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[replication]\ncontended_vms = 400\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "--format", "json", "replicate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let bundle: ReplicationBundle =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/replication.json")).unwrap()).unwrap();
    assert_eq!(bundle.lookup("tableII", "72"), Some(82.0));
    assert!(bundle.notes.iter().any(|n| n.contains("contended pool 400 VMs")));
}

#[test]
fn bad_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[priority]\nbeta = 150\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "generate"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("priority.beta (line 2): beta must be in [0,100]"), "{}", stderr(&out));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_key_and_type_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[workload]\nnum_taks = 5\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "generate"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("workload.num_taks (line 3)"), "{}", stderr(&out));

    let cfg = write_config(dir.path(), "[simulation]\nnum_vms = \"lots\"\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "generate"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("simulation.num_vms (line 2)"), "{}", stderr(&out));
}

#[test]
fn class_rate_mismatch_names_both_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[workload]\narrival_rate = 2.0\nclass_rates = [0.25, 0.5]\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "generate"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("0.75") && err.contains('2'), "{err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bizsched(dir.path(), &["--config", "nope.toml", "generate"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bizsched(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(bizsched(dir.path(), &["--format", "xml", "generate"]).status.code(), Some(2));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[priority]\nbeta = 55\n");
    let out = bizsched(dir.path(), &["--config", &cfg, "--seed", "9", "--print-config"]);
    assert_eq!(out.status.code(), Some(0));
    let printed = stdout(&out);
    assert!(printed.contains("seed = 9") && printed.contains("beta = 55.0"), "{printed}");

    std::fs::write(dir.path().join("printed.toml"), &printed).unwrap();
    let again = bizsched(dir.path(), &["--config", "printed.toml", "--print-config"]);
    assert_eq!(stdout(&again), printed);
}

#[test]
fn config_echo_is_reparseable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[workload]\nnum_tasks = 10\nexec = { kind = \"uniform\", low = 100.0, high = 200.0 }\n",
    );
    assert_eq!(bizsched(dir.path(), &["--config", &cfg, "generate"]).status.code(), Some(0));
    let echo = dir.path().join("out/config.toml");
    let out = bizsched(dir.path(), &["--config", echo.to_str().unwrap(), "generate", "--out", "again"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(!stderr(&out).contains("default "), "echo should leave no defaults: {}", stderr(&out));
    assert_eq!(
        std::fs::read(dir.path().join("out/jobs.csv")).unwrap(),
        std::fs::read(dir.path().join("again/jobs.csv")).unwrap()
    );
}
