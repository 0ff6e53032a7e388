//! Label-skewed (non-iid) partitioning with per-class Dirichlet proportions.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::{LearningError, Samples};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub num_clients: usize,
    /// Dirichlet concentration; smaller is more skewed.
    pub alpha: f64,
    pub seed: u64,
}

/// Split `total` into integer parts proportional to `weights` using
/// largest-remainder rounding (ties to the lower index).
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut by_remainder: Vec<usize> = (0..weights.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

fn dirichlet<R: Rng>(rng: &mut R, gamma: &Gamma<f64>, n: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    if draws.iter().sum::<f64>() > 0.0 {
        draws
    } else {
        // every gamma draw underflowed; treat as a flat split
        vec![1.0; n]
    }
}

/// Per-client lists of training-row indices. Lists are sorted, disjoint, and
/// together cover every row of `train`.
pub fn dirichlet_partition(
    train: &Samples,
    num_classes: usize,
    cfg: &PartitionConfig,
) -> Result<Vec<Vec<usize>>, LearningError> {
    if cfg.num_clients == 0 {
        return Err(LearningError::BadPartition("num_clients must be >= 1".into()));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
        return Err(LearningError::BadPartition(format!(
            "alpha must be positive, got {}",
            cfg.alpha
        )));
    }
    if train.is_empty() || cfg.num_clients > train.len() {
        return Err(LearningError::BadPartition(format!(
            "{} clients but only {} training samples",
            cfg.num_clients,
            train.len()
        )));
    }
    let gamma = Gamma::new(cfg.alpha, 1.0).map_err(|e| LearningError::BadPartition(e.to_string()))?;
    let mut rng = seeded_rng(cfg.seed);
    let mut shards = vec![Vec::new(); cfg.num_clients];
    for class in 0..num_classes {
        let mut rows: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == class).collect();
        rows.shuffle(&mut rng);
        let props = dirichlet(&mut rng, &gamma, cfg.num_clients);
        let counts = largest_remainder(rows.len(), &props);
        let mut rest = rows.as_slice();
        for (shard, count) in shards.iter_mut().zip(counts) {
            let (mine, tail) = rest.split_at(count);
            shard.extend_from_slice(mine);
            rest = tail;
        }
    }
    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(shards)
}
