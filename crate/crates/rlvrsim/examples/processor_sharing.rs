//! The rollout contention model in isolation: batches share the pool's
//! aggregate token rate equally, each clipped by its per-batch decode cap,
//! with rates recomputed at every arrival and departure.
//!
//!     cargo run --example processor_sharing

use rlvrsim::rollout_service_time;

fn main() {
    let pool_rate = 1000.0;

    println!("pool rate {pool_rate} tok/s, per-batch cap 800 tok/s\n");

    // A lone batch is limited by its own cap, not the pool.
    let alone = rollout_service_time(&[(1, 5000.0, 800.0)], pool_rate, 0.0);
    println!(
        "one 5000-token batch alone:     finishes at {:.2} s",
        alone[0].1
    );

    // Two equal batches split the pool evenly.
    let pair = rollout_service_time(&[(1, 5000.0, 800.0), (2, 5000.0, 800.0)], pool_rate, 0.0);
    println!(
        "two 5000-token batches:         both finish at {:.2} s (500 tok/s each)",
        pair[0].1
    );

    // Departures release capacity to the survivors.
    let mixed = rollout_service_time(
        &[(1, 1000.0, 900.0), (2, 5000.0, 900.0), (3, 2000.0, 300.0)],
        pool_rate,
        0.0,
    );
    println!("\nheterogeneous batches (tokens 1000/5000/2000, caps 900/900/300):");
    for (key, t) in mixed {
        println!("  batch {key} completes at {t:.4} s");
    }
}
