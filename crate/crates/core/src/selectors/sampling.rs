use rand::Rng;

use super::{ClientId, SelectorError};

/// Draw `min(n, len)` distinct candidates, each draw proportional to the
/// remaining weight. Once only zero-weight candidates remain, the rest are
/// drawn uniformly.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    candidates: &[ClientId],
    weights: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    if candidates.is_empty() {
        return Err(SelectorError::NoCandidates);
    }
    assert_eq!(candidates.len(), weights.len(), "one weight per candidate");
    let take = n.min(candidates.len());
    let mut pool: Vec<(ClientId, f64)> = candidates
        .iter()
        .copied()
        .zip(weights.iter().map(|w| w.max(0.0)))
        .collect();
    let mut picked = Vec::with_capacity(take);
    for _ in 0..take {
        let total: f64 = pool.iter().map(|(_, w)| w).sum();
        let idx = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, (_, w)) in pool.iter().enumerate() {
                acc += w;
                if u < acc {
                    chosen = Some(i);
                    break;
                }
            }
            // u can reach `acc` through rounding; take the last positive entry
            chosen.unwrap_or_else(|| pool.iter().rposition(|(_, w)| *w > 0.0).unwrap())
        } else {
            rng.random_range(0..pool.len())
        };
        picked.push(pool.remove(idx).0);
    }
    picked.sort_unstable();
    Ok(picked)
}

/// Uniform sample of `min(n, |pool|)` distinct clients.
pub fn select_random<R: Rng + ?Sized>(
    pool: &[ClientId],
    n: usize,
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    if pool.is_empty() {
        return Err(SelectorError::NoCandidates);
    }
    let take = n.min(pool.len());
    let mut picked: Vec<ClientId> = rand::seq::index::sample(rng, pool.len(), take)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Index drawn from a categorical distribution given by non-negative weights.
pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}
