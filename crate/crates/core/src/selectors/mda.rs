//! Availability- and failure-history weighting.
//!
//! Each candidate starts from an availability estimate over the last `m`
//! history entries (0.5 until enough history exists), which is then scaled by
//! `1 - pen / max_pen`, where every past failure at round `i` contributes
//! `1 / (r - i)` to `pen` and `max_pen` sums that term over all rounds before
//! the current round `r`.

use serde::{Deserialize, Serialize};

use super::{ClientId, SelectorError, SelectorState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdaConfig {
    /// Number of most recent history entries used for the availability
    /// estimate.
    pub memory_length: usize,
    pub default_weight: f64,
}

impl MdaConfig {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.memory_length < 2 {
            return Err(SelectorError::Config(format!(
                "mda.memory_length must be >= 2, got {}",
                self.memory_length
            )));
        }
        if !(self.default_weight > 0.0 && self.default_weight <= 1.0) {
            return Err(SelectorError::Config(format!(
                "mda.default_weight must lie in (0, 1], got {}",
                self.default_weight
            )));
        }
        Ok(())
    }
}

impl Default for MdaConfig {
    fn default() -> Self {
        Self {
            memory_length: 10,
            default_weight: 0.5,
        }
    }
}

/// `Σ_{i=0}^{r-1} 1/(r-i)`, the penalty of failing every past round.
pub fn max_penalty(round: usize) -> f64 {
    (1..=round).rev().map(|d| 1.0 / d as f64).sum()
}

/// Fraction of the last `m` inter-round intervals in which the client was
/// seen at both ends, weighted by interval length. `None` if history is
/// shorter than `m`.
pub fn availability_estimate(state: &SelectorState, client: ClientId, m: usize) -> Option<f64> {
    let hist = state.availability(client);
    let len = hist.len();
    if len < m {
        return None;
    }
    let times = state.round_start_times();
    let mut total = 0.0;
    let mut available = 0.0;
    for i in len + 1 - m..len {
        let elapsed = times[i] - times[i - 1];
        total += elapsed;
        if hist[i - 1] && hist[i] {
            available += elapsed;
        }
    }
    Some(available / total)
}

/// Multiplicative failure penalty factor in `[0, 1]`; exactly 1 for a client
/// that never failed.
pub fn penalty_factor(state: &SelectorState, client: ClientId, max_pen: f64) -> f64 {
    let failures = state.failures(client);
    if failures.is_empty() {
        return 1.0;
    }
    let r = state.current_round();
    let pen: f64 = failures.iter().map(|&i| 1.0 / (r - i) as f64).sum();
    1.0 - pen / max_pen
}

/// Weight of one candidate before normalisation.
pub fn raw_weight(state: &SelectorState, client: ClientId, cfg: &MdaConfig) -> f64 {
    raw_weight_with(state, client, cfg, max_penalty(state.current_round()))
}

fn raw_weight_with(state: &SelectorState, client: ClientId, cfg: &MdaConfig, max_pen: f64) -> f64 {
    let base = availability_estimate(state, client, cfg.memory_length).unwrap_or(cfg.default_weight);
    base * penalty_factor(state, client, max_pen)
}

/// Normalised selection weights for `candidates`, summing to one.
///
/// If every raw weight is zero the result is uniform over the candidates.
pub fn mda_weights(state: &SelectorState, candidates: &[ClientId], cfg: &MdaConfig) -> Vec<f64> {
    let max_pen = max_penalty(state.current_round());
    let raw: Vec<f64> = candidates
        .iter()
        .map(|&c| raw_weight_with(state, c, cfg, max_pen))
        .collect();
    normalize(raw)
}

pub(crate) fn normalize(mut weights: Vec<f64>) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        weights.iter_mut().for_each(|w| *w /= sum);
    } else if !weights.is_empty() {
        let u = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = u);
    }
    weights
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with(times: &[f64], histories: &[Vec<bool>], failures: &[Vec<usize>]) -> SelectorState {
        let n = histories.len();
        let mut s = SelectorState::new(n);
        for (r, &t) in times.iter().enumerate() {
            let avail: Vec<bool> = histories.iter().map(|h| h[r]).collect();
            let failed: Vec<usize> = (0..n)
                .filter(|&c| r > 0 && failures[c].contains(&(r - 1)))
                .collect();
            s.update_history(r, t, &avail, &failed).unwrap();
        }
        s
    }

    #[test]
    fn short_history_gets_default_weight() {
        let cfg = MdaConfig {
            memory_length: 4,
            ..MdaConfig::default()
        };
        let s = state_with(&[0.0, 1.0, 2.0], &[vec![true; 3]], &[vec![]]);
        assert_eq!(raw_weight(&s, 0, &cfg), 0.5);
    }

    #[test]
    fn empty_state_gets_default_weight() {
        let s = SelectorState::new(3);
        assert_eq!(mda_weights(&s, &[0, 1, 2], &MdaConfig::default()), vec![1.0 / 3.0; 3]);
        assert_eq!(raw_weight(&s, 1, &MdaConfig::default()), 0.5);
    }

    #[test]
    fn fully_available_window_weighs_one() {
        let cfg = MdaConfig {
            memory_length: 3,
            ..MdaConfig::default()
        };
        let s = state_with(&[0.0, 10.0, 30.0, 35.0], &[vec![false, true, true, true]], &[vec![]]);
        assert_eq!(raw_weight(&s, 0, &cfg), 1.0);
    }

    #[test]
    fn worked_penalty_example() {
        // r = 3, failure at round 1, perfect availability
        let cfg = MdaConfig {
            memory_length: 2,
            ..MdaConfig::default()
        };
        let s = state_with(&[0.0, 1.0, 2.0, 3.0], &[vec![true; 4]], &[vec![1]]);
        assert_eq!(s.current_round(), 3);
        assert!((max_penalty(3) - 11.0 / 6.0).abs() < 1e-15);
        assert!((raw_weight(&s, 0, &cfg) - 8.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn interval_rule_example() {
        // round starts 0, 100, 250 with history T, F, T: both intervals lose
        let cfg = MdaConfig {
            memory_length: 3,
            ..MdaConfig::default()
        };
        let s = state_with(&[0.0, 100.0, 250.0], &[vec![true, false, true]], &[vec![]]);
        assert_eq!(availability_estimate(&s, 0, 3), Some(0.0));
        assert_eq!(raw_weight(&s, 0, &cfg), 0.0);
    }

    #[test]
    fn elapsed_time_weights_the_intervals() {
        let s = state_with(&[0.0, 100.0, 400.0], &[vec![true, true, false]], &[vec![]]);
        assert_eq!(availability_estimate(&s, 0, 3), Some(0.25));
        // only the last interval is inside a window of two entries
        assert_eq!(availability_estimate(&s, 0, 2), Some(0.0));
    }

    #[test]
    fn all_zero_weights_fall_back_to_uniform() {
        let cfg = MdaConfig {
            memory_length: 3,
            ..MdaConfig::default()
        };
        let h = vec![true, false, true];
        let s = state_with(&[0.0, 100.0, 250.0], &[h.clone(), h], &[vec![], vec![]]);
        assert_eq!(mda_weights(&s, &[0, 1], &cfg), vec![0.5, 0.5]);
    }

    #[test]
    fn config_validation() {
        assert!(MdaConfig { memory_length: 1, default_weight: 0.5 }.validate().is_err());
        assert!(MdaConfig { memory_length: 2, default_weight: 0.0 }.validate().is_err());
        assert!(MdaConfig::default().validate().is_ok());
    }
}
