//! Run one configured experiment and print the per-round log head and the
//! report metrics.
//!
//! ```text
//! cargo run --release --example single_experiment -- configs/example.toml
//! ```

use std::path::PathBuf;

use fedsel::{load_config, run_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "configs/example.toml".into()));
    let cfg = load_config(&path)?;
    let seed = cfg.seeds.run_seeds[0];
    let report = run_experiment(&cfg, seed)?;

    println!("{} on a {} scenario, run seed {seed}", cfg.selector.kind, cfg.scenario.kind);
    for r in report.rounds.iter().take(8) {
        println!(
            "round {:>3} @ {:>9.1} s: {:>6.1} s, selected {:?}, failed {:?}",
            r.round, r.start_s, r.duration_s, r.selected, r.failed
        );
    }
    println!("...");
    println!("training time      {:.1} s", report.training_time_s);
    println!("failed rounds      {}", report.failed_rounds);
    println!("skipped rounds     {}", report.skipped_rounds);
    println!("final accuracy     {:.2}%", report.final_accuracy);
    println!("avg failed clients {:.3}", report.avg_failed_clients);
    println!("participants       {} unique / {} total", report.unique_participants, report.total_participants);
    Ok(())
}
