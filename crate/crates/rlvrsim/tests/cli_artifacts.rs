//! Runner-level behavior: artifact layout, sweeps, scheduler comparison
//! tables, and error classification.

use rlvrsim::cli::{
    compare_schedulers, resolve_scenario, run_scenario, CliError, RunRequest, SweepSpec,
    TimelineFormat,
};
use rlvrsim::sched::{SchedulerChoice, SchedulerKind};

fn temp_dir(tag: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("rlvrsim-test-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn run_writes_all_artifacts() {
    let out = temp_dir("run");
    let mut req = RunRequest::new("table1_heterogeneous", &out);
    req.scheduler = Some(SchedulerChoice::new(SchedulerKind::MultiLoraSync));
    let artifacts = run_scenario(&req).unwrap();
    assert_eq!(artifacts.len(), 1);
    let dir = &artifacts[0].dir;
    for file in [
        "trace.ndjson",
        "report.json",
        "tasks.csv",
        "pools.csv",
        "timeline.txt",
    ] {
        assert!(dir.join(file).exists(), "missing {file}");
    }
    // The sync run's per-task table carries the barrier-wait column with
    // nonzero waits for the two faster tasks.
    let tasks = std::fs::read_to_string(dir.join("tasks.csv")).unwrap();
    assert!(tasks.contains("barrier_wait_total_seconds"));
    let gsm_line = tasks.lines().find(|l| l.starts_with("gsm8k,")).unwrap();
    let wait: f64 = gsm_line.split(',').nth(6).unwrap().parse().unwrap();
    assert!(wait > 0.0);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn svg_timeline_is_self_contained() {
    let out = temp_dir("svg");
    let mut req = RunRequest::new("table1_heterogeneous", &out);
    req.timeline = TimelineFormat::Svg;
    let artifacts = run_scenario(&req).unwrap();
    let svg = std::fs::read_to_string(artifacts[0].dir.join("timeline.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(
        !svg.contains("href"),
        "svg must not reference external assets"
    );
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn sweep_emits_one_row_per_value() {
    let out = temp_dir("sweep");
    let mut req = RunRequest::new("fig6_sweep", &out);
    req.sweep = Some(SweepSpec::parse("task_count=1,2,4").unwrap());
    let artifacts = run_scenario(&req).unwrap();
    assert_eq!(artifacts.len(), 3);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains(",task_count,1,"));
    assert!(rows[2].contains(",task_count,4,"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn compare_ranks_marlaas_first_and_shares_seeds() {
    let out = temp_dir("compare");
    let req = RunRequest::new("table2_search10", &out);
    let choices: Vec<SchedulerChoice> = SchedulerKind::ALL.map(SchedulerChoice::new).to_vec();
    let artifacts = compare_schedulers(&req, &choices).unwrap();
    assert_eq!(artifacts.len(), 4);
    let seeds: Vec<u64> = artifacts.iter().map(|a| a.report.seed).collect();
    assert!(seeds.windows(2).all(|w| w[0] == w[1]), "seeds must match");
    let best = artifacts
        .iter()
        .max_by(|a, b| {
            a.report
                .steps_per_hour
                .partial_cmp(&b.report.steps_per_hour)
                .unwrap()
        })
        .unwrap();
    assert_eq!(best.report.scheduler, "marlaas");
    // Ratio columns exist against the sequential baseline.
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("speedup_vs_baseline"));
    let marlaas_row = csv.lines().find(|l| l.contains(",marlaas,")).unwrap();
    let speedup: f64 = marlaas_row.split(',').nth(10).unwrap().parse().unwrap();
    assert!(speedup > 1.0);
    let disagg_row = csv
        .lines()
        .find(|l| l.contains(",single_disaggregated,"))
        .unwrap();
    let self_ratio: f64 = disagg_row.split(',').nth(10).unwrap().parse().unwrap();
    assert_eq!(self_ratio, 1.0);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn compare_single_scheduler_ratios_are_unity() {
    let out = temp_dir("single");
    let req = RunRequest::new("table1_heterogeneous", &out);
    let choices = vec![SchedulerChoice::new(SchedulerKind::Marlaas)];
    compare_schedulers(&req, &choices).unwrap();
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[10].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fields[11].parse::<f64>().unwrap(), 1.0);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn sweep_times_schedulers_row_count() {
    // 3 sweep points x 2 schedulers -> 6 combined rows.
    let out = temp_dir("cartesian");
    let mut req = RunRequest::new("fig6_sweep", &out);
    req.sweep = Some(SweepSpec::parse("task_count=1,2,4").unwrap());
    let choices = vec![
        SchedulerChoice::new(SchedulerKind::Marlaas),
        SchedulerChoice::new(SchedulerKind::SingleDisaggregated),
    ];
    let artifacts = compare_schedulers(&req, &choices).unwrap();
    assert_eq!(artifacts.len(), 6);
    let csv = std::fs::read_to_string(out.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn missing_scenario_fails_with_io_code_and_no_artifacts() {
    let out = temp_dir("missing");
    let req = RunRequest::new("/nonexistent/scenario.toml", &out);
    let err = run_scenario(&req).unwrap_err();
    assert_eq!(err.exit_code(), 5);
    assert!(!out.exists(), "no partial artifacts on failure");
}

#[test]
fn rerun_is_byte_identical() {
    let out_a = temp_dir("rerun-a");
    let out_b = temp_dir("rerun-b");
    for out in [&out_a, &out_b] {
        let req = RunRequest::new("table2_search10", out);
        run_scenario(&req).unwrap();
    }
    let read_all = |root: &std::path::Path| {
        let mut files = Vec::new();
        let run_dir = std::fs::read_dir(root).unwrap().next().unwrap().unwrap();
        let mut entries: Vec<_> = std::fs::read_dir(run_dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for p in entries {
            files.push((
                p.file_name().unwrap().to_owned(),
                std::fs::read(&p).unwrap(),
            ));
        }
        files
    };
    assert_eq!(read_all(&out_a), read_all(&out_b));
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    // Parse failure.
    let parse = CliError::Scenario(rlvrsim::ScenarioError::Parse("x".into()));
    assert_eq!(parse.exit_code(), 2);
    // Validation failure from a real malformed scenario.
    let dir = temp_dir("codes");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "[sim]\nseed = 1\n[cluster]\n").unwrap();
    let err = resolve_scenario(bad.to_str().unwrap()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    let _ = std::fs::remove_dir_all(&dir);
}
