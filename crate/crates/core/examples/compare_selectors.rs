//! Compare all five selectors on one shared world.
//!
//! ```text
//! cargo run --release --example compare_selectors -- configs/low_availability.toml [jobs]
//! ```

use std::path::PathBuf;

use fedsel::report::render_table;
use fedsel::{compare_selectors, load_config, SelectorKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/example.toml".into()));
    let jobs: usize = args.next().map(|j| j.parse()).transpose()?.unwrap_or(4);
    let cfg = load_config(&path)?;

    let cmp = compare_selectors(&cfg, &SelectorKind::ALL, &cfg.seeds.run_seeds, jobs)?;
    println!("scenario {} / trace digest {}", cfg.scenario.kind, &cmp.trace_digest[..16]);
    let columns: Vec<_> = cmp
        .results
        .iter()
        .map(|r| (r.selector.to_string(), &r.summary))
        .collect();
    print!("{}", render_table(&columns, Some(cmp.fastest)));

    println!("\nper-seed failed rounds / training time:");
    for r in &cmp.results {
        let cells: Vec<String> = r
            .reports
            .iter()
            .map(|rep| format!("{}/{:.0}", rep.failed_rounds, rep.training_time_s))
            .collect();
        println!("  {:<9} {}", r.selector.as_str(), cells.join("  "));
    }
    Ok(())
}
