use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampling::select_random;
use super::{ClientId, SelectorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FedcsOrder {
    /// Drop clients over the deadline, then sample; rounds stay full.
    #[default]
    FilterFirst,
    /// Sample from everyone, then drop the slow picks; rounds may under-fill.
    SampleFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FedcsConfig {
    pub threshold_s: f64,
    pub order: FedcsOrder,
}

impl Default for FedcsConfig {
    fn default() -> Self {
        Self {
            threshold_s: 120.0,
            order: FedcsOrder::FilterFirst,
        }
    }
}

impl FedcsConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if !(self.threshold_s > 0.0) {
            return Err(SelectorError::Config(format!(
                "fedcs.threshold_s must be positive, got {}",
                self.threshold_s
            )));
        }
        Ok(())
    }
}

/// Deadline-based selection: only clients whose estimated round time fits
/// under the threshold may be picked.
pub fn select_fedcs<R: Rng + ?Sized>(
    available: &[ClientId],
    n: usize,
    cfg: &FedcsConfig,
    round_times: &[f64],
    rng: &mut R,
) -> Result<Vec<ClientId>, SelectorError> {
    let fits = |c: &ClientId| round_times[*c] <= cfg.threshold_s;
    match cfg.order {
        FedcsOrder::FilterFirst => {
            let eligible: Vec<ClientId> = available.iter().copied().filter(fits).collect();
            select_random(&eligible, n, rng)
        }
        FedcsOrder::SampleFirst => {
            let picked: Vec<ClientId> = select_random(available, n, rng)?
                .into_iter()
                .filter(fits)
                .collect();
            if picked.is_empty() {
                Err(SelectorError::NoCandidates)
            } else {
                Ok(picked)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn cfg(threshold_s: f64) -> FedcsConfig {
        FedcsConfig {
            threshold_s,
            order: FedcsOrder::FilterFirst,
        }
    }

    #[test]
    fn all_fast_matches_random() {
        let times = vec![1.0; 20];
        let pool: Vec<usize> = (0..20).collect();
        for seed in 0..50 {
            let a = select_fedcs(&pool, 5, &cfg(10.0), &times, &mut seeded_rng(seed)).unwrap();
            let b = select_random(&pool, 5, &mut seeded_rng(seed)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn threshold_below_everyone_skips() {
        let times = vec![5.0, 6.0];
        let mut rng = seeded_rng(0);
        assert_eq!(
            select_fedcs(&[0, 1], 1, &cfg(1.0), &times, &mut rng),
            Err(SelectorError::NoCandidates)
        );
        let sample_first = FedcsConfig {
            order: FedcsOrder::SampleFirst,
            ..cfg(1.0)
        };
        assert_eq!(
            select_fedcs(&[0, 1], 1, &sample_first, &times, &mut rng),
            Err(SelectorError::NoCandidates)
        );
    }

    #[test]
    fn selected_clients_always_meet_threshold() {
        let times: Vec<f64> = (0..40).map(|i| f64::from(i) * 10.0).collect();
        let pool: Vec<usize> = (0..40).collect();
        let mut rng = seeded_rng(5);
        for order in [FedcsOrder::FilterFirst, FedcsOrder::SampleFirst] {
            let c = FedcsConfig { threshold_s: 195.0, order };
            for _ in 0..1000 {
                if let Ok(sel) = select_fedcs(&pool, 10, &c, &times, &mut rng) {
                    assert!(sel.iter().all(|&s| times[s] <= 195.0));
                    if order == FedcsOrder::FilterFirst {
                        assert_eq!(sel.len(), 10);
                    }
                }
            }
        }
    }
}
