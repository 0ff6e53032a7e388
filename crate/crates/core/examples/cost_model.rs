//! Per-client round times of a configured population, and how a FedCS
//! deadline or TiFL tiers would split it.
//!
//! ```text
//! cargo run --release --example cost_model -- configs/low_availability.toml
//! ```

use std::path::PathBuf;

use fedsel::engine::Population;
use fedsel::load_config;
use fedsel::selectors::assign_tiers;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "configs/example.toml".into()));
    let cfg = load_config(&path)?;
    let pop = Population::build(&cfg)?;
    println!(
        "model {} bytes, {} local epoch(s), {} clients",
        pop.dims.model_size_bytes,
        pop.dims.local_epochs,
        pop.num_clients()
    );

    let mut sorted = pop.round_times.clone();
    sorted.sort_by(f64::total_cmp);
    let pct = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    println!(
        "round time (s): min {:.1}  p25 {:.1}  median {:.1}  p75 {:.1}  max {:.1}",
        sorted[0],
        pct(0.25),
        pct(0.5),
        pct(0.75),
        sorted[sorted.len() - 1]
    );

    let threshold = cfg.selector.fedcs.threshold_s;
    let excluded = pop.round_times.iter().filter(|&&t| t > threshold).count();
    println!(
        "fedcs threshold {threshold} s excludes {excluded} clients ({:.1}%)",
        100.0 * excluded as f64 / pop.num_clients() as f64
    );

    let tiers = assign_tiers(&pop.round_times, cfg.selector.tifl.num_tiers)?;
    for k in 0..tiers.num_tiers() {
        let times: Vec<f64> = tiers.members(k).iter().map(|&c| pop.round_times[c]).collect();
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(0.0, f64::max);
        println!("tier {k}: {:>3} clients, {lo:.1}-{hi:.1} s", times.len());
    }
    Ok(())
}
