//! Generate a synthetic trace pool, rank it, and draw the three availability
//! scenarios from it. Prints how available each scenario's clients are.
//!
//! ```text
//! cargo run --example traces_scenarios
//! ```

use fedsel::config::default_trace_classes;
use fedsel::rng::derive_seed;
use fedsel::traces::{
    build_scenario, generate_trace, rank_traces, trace_stats, AvailabilityTrace, ScenarioKind,
    ScenarioSpec,
};

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon = 7.0 * 24.0 * 3600.0;
    let classes = default_trace_classes();
    let pool: Vec<AvailabilityTrace> = (0..900)
        .map(|i| generate_trace(&classes[i % classes.len()], horizon, derive_seed(42, &[i as u64])))
        .collect::<Result<_, _>>()?;

    let order = rank_traces(&pool)?;
    let ranked: Vec<AvailabilityTrace> = order.iter().map(|&i| pool[i].clone()).collect();
    let worst = trace_stats(&ranked[0]);
    let best = trace_stats(ranked.last().unwrap());
    println!(
        "pool of {}: worst trace {:.1}% available ({:.2} flips/h), best {:.1}% ({:.2} flips/h)",
        ranked.len(),
        100.0 * worst.available_fraction,
        worst.transition_rate,
        100.0 * best.available_fraction,
        best.transition_rate
    );

    for kind in [ScenarioKind::Low, ScenarioKind::Average, ScenarioKind::High] {
        let spec = ScenarioSpec::new(kind, 200);
        let clients = build_scenario(&ranked, &spec, 7)?;
        let stats: Vec<_> = clients.iter().map(trace_stats).collect();
        let online_at_noon = clients
            .iter()
            .filter(|t| t.is_available(12.0 * 3600.0).unwrap_or(false))
            .count();
        println!(
            "{kind:>7}: blocks {:?}, mean availability {:.1}%, mean {:.3} flips/h, {online_at_noon}/200 online at t = 12 h",
            spec.block_counts(),
            100.0 * mean(stats.iter().map(|s| s.available_fraction)),
            mean(stats.iter().map(|s| s.transition_rate)),
        );
    }

    // a hand-written trace: online, offline between 10 and 20 minutes
    let t = AvailabilityTrace::new(true, vec![600.0, 1200.0], 3600.0)?;
    println!(
        "\nhand-made trace: available at 599 s {}, at 600 s {}, drops during (500, 700] {}",
        t.is_available(599.0)?,
        t.is_available(600.0)?,
        t.unavailable_within(500.0, 700.0)?
    );
    Ok(())
}
