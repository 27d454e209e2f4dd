//! Run all four scheduling regimes on the same scenario and seed, then rank
//! them by throughput with speedups against the sequential baseline.
//!
//!     cargo run --example compare_schedulers [scenario-name]

use rlvrsim::*;

fn main() {
    let name = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "table2_search10".into());
    let base = load_bundled(&name).expect("bundled scenario");

    let mut rows = Vec::new();
    for kind in SchedulerKind::ALL {
        let scenario = base.with_scheduler(SchedulerChoice::new(kind)).unwrap();
        let outcome = simulate(&scenario).expect("simulation");
        let report = compute_metrics(&outcome.trace, &scenario).expect("metrics");
        let util = report
            .per_pool
            .iter()
            .map(|p| format!("{} {:5.1}%", p.pool.as_str(), p.utilization * 100.0))
            .collect::<Vec<_>>()
            .join("  ");
        rows.push((kind, report.horizon_seconds, report.steps_per_hour, util));
    }

    let baseline = rows
        .iter()
        .find(|(k, ..)| *k == SchedulerKind::SingleDisaggregated)
        .map(|&(_, _, tput, _)| tput)
        .unwrap();

    println!("scenario {name} (seed {})", base.seed);
    println!(
        "{:<22} {:>12} {:>10} {:>9}  utilization",
        "scheduler", "time (s)", "steps/hr", "speedup"
    );
    for (kind, horizon, tput, util) in &rows {
        println!(
            "{:<22} {:>12.1} {:>10.2} {:>8.2}x  {util}",
            kind.to_string(),
            horizon,
            tput,
            tput / baseline
        );
    }
}
