use serde::{Deserialize, Serialize};

use super::{ClientId, SelectorError};

/// Per-client availability and failure history observed by the server.
///
/// After `update_history` for round `r`, every availability list has length
/// `r + 1` and every recorded failure index is `< r`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectorState {
    availability: Vec<Vec<bool>>,
    failures: Vec<Vec<usize>>,
    round_start_times: Vec<f64>,
}

impl SelectorState {
    pub fn new(num_clients: usize) -> Self {
        Self {
            availability: vec![Vec::new(); num_clients],
            failures: vec![Vec::new(); num_clients],
            round_start_times: Vec::new(),
        }
    }

    pub fn num_clients(&self) -> usize {
        self.availability.len()
    }

    /// Index of the round currently in progress (0 before any update).
    pub fn current_round(&self) -> usize {
        self.round_start_times.len().saturating_sub(1)
    }

    pub fn rounds_begun(&self) -> usize {
        self.round_start_times.len()
    }

    pub fn availability(&self, client: ClientId) -> &[bool] {
        &self.availability[client]
    }

    pub fn failures(&self, client: ClientId) -> &[usize] {
        &self.failures[client]
    }

    pub fn round_start_times(&self) -> &[f64] {
        &self.round_start_times
    }

    /// Begin round `round` at `start_time`: record who is reachable now and
    /// who failed in the previous round.
    pub fn update_history(
        &mut self,
        round: usize,
        start_time: f64,
        availability_now: &[bool],
        failures_last_round: &[ClientId],
    ) -> Result<(), SelectorError> {
        let expected = self.rounds_begun();
        if round != expected {
            return Err(SelectorError::RoundOrder {
                expected,
                got: round,
            });
        }
        if availability_now.len() != self.num_clients() {
            return Err(SelectorError::AvailabilityLength {
                expected: self.num_clients(),
                got: availability_now.len(),
            });
        }
        if let Some(&last) = self.round_start_times.last() {
            if start_time <= last {
                return Err(SelectorError::ClockNotIncreasing {
                    previous: last,
                    got: start_time,
                });
            }
        }
        if round == 0 && !failures_last_round.is_empty() {
            return Err(SelectorError::FailureBeforeFirstRound);
        }
        for &c in failures_last_round {
            let seen = self
                .availability
                .get(c)
                .ok_or(SelectorError::UnknownClient(c))?;
            if !seen[round - 1] {
                return Err(SelectorError::FailureWhileUnavailable {
                    client: c,
                    round: round - 1,
                });
            }
        }
        let mut sorted = failures_last_round.to_vec();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(SelectorError::DuplicateFailure { client: w[0] });
        }
        for &c in failures_last_round {
            self.failures[c].push(round - 1);
        }
        for (hist, &now) in self.availability.iter_mut().zip(availability_now) {
            hist.push(now);
        }
        self.round_start_times.push(start_time);
        Ok(())
    }
}
