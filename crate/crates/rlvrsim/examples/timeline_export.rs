//! Render execution timelines: an ASCII chart on stdout and a self-contained
//! SVG next to it, for a three-task scenario under two schedulers.
//!
//!     cargo run --example timeline_export [out-dir]

use rlvrsim::metrics::{build_timeline, timeline_ascii, timeline_svg};
use rlvrsim::*;

fn main() {
    let out: std::path::PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "rlvrsim-out".into())
        .into();
    std::fs::create_dir_all(&out).expect("output dir");
    let base = load_bundled("table1_heterogeneous").expect("bundled scenario");

    for kind in [SchedulerKind::SingleDisaggregated, SchedulerKind::Marlaas] {
        let scenario = base.with_scheduler(SchedulerChoice::new(kind)).unwrap();
        let outcome = simulate(&scenario).expect("simulation");
        let model = build_timeline(&outcome.trace, &scenario);

        println!("=== {kind} ===");
        print!("{}", timeline_ascii(&model, None));
        println!();

        let path = out.join(format!("timeline_{kind}.svg"));
        std::fs::write(&path, timeline_svg(&model)).expect("write svg");
        println!("wrote {}\n", path.display());
    }
}
