//! Split clients into speed tiers and watch how often each tier is chosen.
//!
//! ```text
//! cargo run --example tifl_tiers
//! ```

use fedsel::cost::{generate_profiles, round_time, CapabilityBounds, TaskDims};
use fedsel::rng::seeded_rng;
use fedsel::selectors::{assign_tiers, select_tifl, tier_probabilities};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = TaskDims {
        model_size_bytes: 1680.0,
        local_epochs: 1,
        batch_size: 20,
    };
    let profiles: Vec<_> = generate_profiles(100, &CapabilityBounds::default(), 3)?
        .into_iter()
        .map(|p| p.with_samples(20))
        .collect();
    let times: Vec<f64> = profiles
        .iter()
        .map(|p| round_time(p, &dims))
        .collect::<Result<_, _>>()?;

    let tiers = assign_tiers(&times, 5)?;
    let probs = tier_probabilities(5, 1.4);
    let mut rng = seeded_rng(1);
    let all: Vec<usize> = (0..times.len()).collect();
    let mut picks = [0usize; 5];
    let draws = 20_000;
    for _ in 0..draws {
        let chosen = select_tifl(&all, 10, &tiers, &probs, &mut rng)?;
        picks[tiers.tier_of(chosen[0])] += 1;
    }
    for k in 0..5 {
        let slowest = tiers.members(k).iter().map(|&c| times[c]).fold(0.0, f64::max);
        println!(
            "tier {k}: {} clients, slowest {slowest:6.1} s, p = {:.4}, drawn {:.4}",
            tiers.members(k).len(),
            probs[k],
            picks[k] as f64 / draws as f64
        );
    }
    Ok(())
}
