//! Feed a small availability and failure history into the MDA weighting and
//! print the resulting selection probabilities.
//!
//! ```text
//! cargo run --example mda_weights
//! ```

use fedsel::selectors::mda::{availability_estimate, max_penalty, penalty_factor};
use fedsel::selectors::{mda_weights, MdaConfig, SelectorState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MdaConfig {
        memory_length: 4,
        default_weight: 0.5,
    };
    // client 0: always online; client 1: offline in round 2;
    // client 2: online but failed mid-round in round 3; client 3: flappy
    let rounds: [(f64, [bool; 4], &[usize]); 6] = [
        (0.0, [true, true, true, true], &[]),
        (100.0, [true, true, true, false], &[]),
        (250.0, [true, false, true, true], &[]),
        (300.0, [true, true, true, false], &[]),
        (500.0, [true, true, true, true], &[2]),
        (620.0, [true, true, true, true], &[]),
    ];
    let mut state = SelectorState::new(4);
    for (r, (start, avail, failed)) in rounds.iter().enumerate() {
        state.update_history(r, *start, avail, failed)?;
    }

    let r = state.current_round();
    let max_pen = max_penalty(r);
    println!("round {r}, max penalty {max_pen:.4}");
    for c in 0..4 {
        println!(
            "client {c}: availability estimate {:?}, penalty factor {:.4}",
            availability_estimate(&state, c, cfg.memory_length),
            penalty_factor(&state, c, max_pen)
        );
    }
    let candidates = [0, 1, 2, 3];
    let weights = mda_weights(&state, &candidates, &cfg);
    println!("selection probabilities: {weights:.4?}");
    Ok(())
}
