//! Speed tiers and tier-restricted selection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mda::{mda_weights, MdaConfig};
use super::sampling::{draw_index, select_random, weighted_sample_without_replacement};
use super::{ClientId, SelectorError, SelectorState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiflConfig {
    pub num_tiers: usize,
    /// How much more often a tier is drawn than the next slower one.
    pub ratio: f64,
}

impl Default for TiflConfig {
    fn default() -> Self {
        Self {
            num_tiers: 5,
            ratio: 1.4,
        }
    }
}

impl TiflConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.num_tiers == 0 {
            return Err(SelectorError::Config("tifl.num_tiers must be >= 1".into()));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(SelectorError::Config(format!(
                "tifl.ratio must be positive, got {}",
                self.ratio
            )));
        }
        Ok(())
    }
}

/// Tier membership, fastest tier first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tiers {
    tier_of: Vec<usize>,
    members: Vec<Vec<ClientId>>,
}

impl Tiers {
    pub fn num_tiers(&self) -> usize {
        self.members.len()
    }

    pub fn tier_of(&self, client: ClientId) -> usize {
        self.tier_of[client]
    }

    pub fn members(&self, tier: usize) -> &[ClientId] {
        &self.members[tier]
    }
}

/// Split clients into `num_tiers` contiguous groups by ascending round time.
/// Ties are broken by client id; when the split is uneven the fastest tiers
/// get one extra client each.
pub fn assign_tiers(round_times: &[f64], num_tiers: usize) -> Result<Tiers, SelectorError> {
    if num_tiers == 0 || num_tiers > round_times.len() {
        return Err(SelectorError::TooManyTiers {
            tiers: num_tiers,
            clients: round_times.len(),
        });
    }
    let mut order: Vec<ClientId> = (0..round_times.len()).collect();
    order.sort_by(|&a, &b| round_times[a].total_cmp(&round_times[b]).then(a.cmp(&b)));
    let base = order.len() / num_tiers;
    let extra = order.len() % num_tiers;
    let mut tier_of = vec![0; order.len()];
    let mut members = Vec::with_capacity(num_tiers);
    let mut rest = order.as_slice();
    for k in 0..num_tiers {
        let size = base + usize::from(k < extra);
        let (group, tail) = rest.split_at(size);
        for &c in group {
            tier_of[c] = k;
        }
        members.push(group.to_vec());
        rest = tail;
    }
    Ok(Tiers { tier_of, members })
}

/// Tier draw probabilities: `p_k ∝ ratio^(T-1-k)` with tier 0 the fastest.
pub fn tier_probabilities(num_tiers: usize, ratio: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..num_tiers)
        .map(|k| ratio.powi((num_tiers - 1 - k) as i32))
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / sum).collect()
}

/// Draw a tier among those with at least one available client, with the
/// tier probabilities renormalised over that subset. Returns the tier and its
/// available members.
fn draw_tier<R: Rng + ?Sized>(
    available: &[ClientId],
    tiers: &Tiers,
    probs: &[f64],
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    let mut by_tier = vec![Vec::new(); tiers.num_tiers()];
    for &c in available {
        by_tier[tiers.tier_of(c)].push(c);
    }
    let weights: Vec<f64> = by_tier
        .iter()
        .zip(probs)
        .map(|(m, &p)| if m.is_empty() { 0.0 } else { p })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(SelectorError::NoCandidates);
    }
    let tier = draw_index(&weights, rng);
    Ok(std::mem::take(&mut by_tier[tier]))
}

pub fn select_tifl<R: Rng + ?Sized>(
    available: &[ClientId],
    n: usize,
    tiers: &Tiers,
    probs: &[f64],
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    let pool = draw_tier(available, tiers, probs, rng)?;
    select_random(&pool, n, rng)
}

pub fn select_tifl_mda<R: Rng + ?Sized>(
    available: &[ClientId],
    n: usize,
    tiers: &Tiers,
    probs: &[f64],
    state: &SelectorState,
    cfg: &MdaConfig,
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    let pool = draw_tier(available, tiers, probs, rng)?;
    let weights = mda_weights(state, &pool, cfg);
    weighted_sample_without_replacement(&pool, &weights, n, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use proptest::prelude::*;

    #[test]
    fn probabilities_examples() {
        assert_eq!(tier_probabilities(1, 1.4), vec![1.0]);
        let p = tier_probabilities(2, 1.4);
        assert!((p[0] - 7.0 / 12.0).abs() < 1e-12 && (p[1] - 5.0 / 12.0).abs() < 1e-12);
        let p = tier_probabilities(5, 1.4);
        let expect = [3.8416, 2.744, 1.96, 1.4, 1.0].map(|x| x / 10.9456);
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for w in p.windows(2) {
            assert!((w[0] / w[1] - 1.4).abs() < 1e-12);
        }
    }

    #[test]
    fn even_split_in_speed_order() {
        let times: Vec<f64> = (0..10).map(|i| f64::from(10 - i)).collect();
        let tiers = assign_tiers(&times, 5).unwrap();
        assert_eq!(tiers.members(0), &[9, 8]);
        assert_eq!(tiers.members(4), &[1, 0]);
        assert!((0..5).all(|k| tiers.members(k).len() == 2));
    }

    #[test]
    fn identical_speeds_split_by_id() {
        let tiers = assign_tiers(&[1.0; 7], 3).unwrap();
        assert_eq!(tiers.members(0), &[0, 1, 2]);
        assert_eq!(tiers.members(1), &[3, 4]);
        assert_eq!(tiers.members(2), &[5, 6]);
    }

    #[test]
    fn too_many_tiers() {
        assert_eq!(
            assign_tiers(&[1.0, 2.0], 3),
            Err(SelectorError::TooManyTiers { tiers: 3, clients: 2 })
        );
    }

    #[test]
    fn single_available_tier_is_always_drawn() {
        let tiers = assign_tiers(&(0..10).map(f64::from).collect::<Vec<_>>(), 5).unwrap();
        let probs = tier_probabilities(5, 1.4);
        let mut rng = seeded_rng(2);
        for _ in 0..200 {
            let got = select_tifl(&[6, 7], 10, &tiers, &probs, &mut rng).unwrap();
            assert_eq!(got, vec![6, 7]);
        }
        assert_eq!(
            select_tifl(&[], 3, &tiers, &probs, &mut rng),
            Err(SelectorError::NoCandidates)
        );
    }

    #[test]
    fn tier_zero_frequency() {
        let times: Vec<f64> = (0..50).map(f64::from).collect();
        let tiers = assign_tiers(&times, 5).unwrap();
        let probs = tier_probabilities(5, 1.4);
        let all: Vec<usize> = (0..50).collect();
        let mut rng = seeded_rng(99);
        let hits = (0..100_000)
            .filter(|_| tiers.tier_of(select_tifl(&all, 1, &tiers, &probs, &mut rng).unwrap()[0]) == 0)
            .count();
        assert!((hits as f64 / 100_000.0 - 0.3510).abs() <= 0.01);
    }

    proptest! {
        #[test]
        fn tiers_are_sorted_bands(times in prop::collection::vec(0.0f64..100.0, 1..80), t in 1usize..8) {
            prop_assume!(t <= times.len());
            let tiers = assign_tiers(&times, t).unwrap();
            for k in 0..t.saturating_sub(1) {
                let max_k = tiers.members(k).iter().map(|&c| times[c]).fold(f64::MIN, f64::max);
                let min_next = tiers.members(k + 1).iter().map(|&c| times[c]).fold(f64::MAX, f64::min);
                prop_assert!(max_k <= min_next);
            }
            let sizes: Vec<usize> = (0..t).map(|k| tiers.members(k).len()).collect();
            prop_assert_eq!(sizes.iter().sum::<usize>(), times.len());
            prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
        }
    }
}
