//! Thin command-line wrapper over the library's scenario runner.

use clap::{Args, Parser, Subcommand};

use rlvrsim::cli::{
    compare_schedulers, run_scenario, CliError, RunRequest, SweepSpec, TimelineFormat,
};
use rlvrsim::sched::{SchedulerChoice, SchedulerKind};

#[derive(Parser)]
#[command(
    name = "rlvrsim",
    version,
    about = "Multi-tenant RLVR scheduling simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file path or bundled scenario name
    /// (table1_heterogeneous, table2_search10, table4_ablation, fig6_sweep).
    #[arg(long)]
    scenario: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep one parameter, e.g. task_count=1,2,4,8,16,32.
    #[arg(long)]
    sweep: Option<String>,
    /// Output directory (default: $RLVRSIM_OUT_DIR or ./rlvrsim-out).
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    /// Timeline format: ascii or svg.
    #[arg(long, default_value = "ascii")]
    timeline: String,
    /// ASCII timeline seconds per column.
    #[arg(long)]
    quantum: Option<f64>,
    /// Stop the simulation at this virtual time instead of running to
    /// completion.
    #[arg(long)]
    until_seconds: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (optionally swept) and write artifacts.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the scenario's scheduler.
        #[arg(long)]
        scheduler: Option<String>,
    },
    /// Run several schedulers on the same scenario and seed, with ratio
    /// columns against the single_disaggregated baseline.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated scheduler list (default: all four).
        #[arg(long)]
        schedulers: Option<String>,
    },
    /// Sweep a parameter (shorthand for run --sweep).
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Override the scenario's scheduler.
        #[arg(long)]
        scheduler: Option<String>,
        /// Parameter sweep, e.g. task_count=1,2,4 (alias for --sweep).
        #[arg(long = "values")]
        values: Option<String>,
    },
}

fn parse_scheduler(s: &str) -> Result<SchedulerChoice, CliError> {
    let kind: SchedulerKind = s.parse().map_err(CliError::Request)?;
    Ok(SchedulerChoice::new(kind))
}

fn build_request(common: &CommonArgs, scheduler: Option<&String>) -> Result<RunRequest, CliError> {
    let mut req = RunRequest::new(
        common.scenario.clone(),
        common
            .out
            .clone()
            .unwrap_or_else(RunRequest::default_out_dir),
    );
    req.seed = common.seed;
    req.timeline = common
        .timeline
        .parse::<TimelineFormat>()
        .map_err(CliError::Request)?;
    req.quantum = common.quantum;
    req.until_seconds = common.until_seconds;
    if let Some(s) = &common.sweep {
        req.sweep = Some(SweepSpec::parse(s)?);
    }
    if let Some(s) = scheduler {
        req.scheduler = Some(parse_scheduler(s)?);
    }
    Ok(req)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, scheduler } => {
            let req = build_request(&common, scheduler.as_ref())?;
            run_scenario(&req)?;
            Ok(())
        }
        Command::Compare { common, schedulers } => {
            let req = build_request(&common, None)?;
            let choices: Vec<SchedulerChoice> = match schedulers {
                Some(list) => list
                    .split(',')
                    .map(|s| parse_scheduler(s.trim()))
                    .collect::<Result<_, _>>()?,
                None => SchedulerKind::ALL.map(SchedulerChoice::new).to_vec(),
            };
            compare_schedulers(&req, &choices)?;
            Ok(())
        }
        Command::Sweep {
            common,
            scheduler,
            values,
        } => {
            let mut req = build_request(&common, scheduler.as_ref())?;
            if req.sweep.is_none() {
                let values = values.ok_or_else(|| {
                    CliError::Request("sweep requires --sweep or --values".into())
                })?;
                req.sweep = Some(SweepSpec::parse(&values)?);
            }
            run_scenario(&req)?;
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
