//! Client selection strategies behind a single [`Selector`] type.
//!
//! * `random`: uniform over available clients.
//! * `fedcs`: uniform over available clients that meet a round-time deadline.
//! * `tifl`: draw a speed tier, then sample uniformly inside it.
//! * `mda`: weight available clients by recent availability and past failures.
//! * `tifl_mda`: tier draw as in `tifl`, MDA weighting inside the tier.

mod fedcs;
mod history;
pub mod mda;
mod sampling;
mod tifl;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fedcs::{select_fedcs, FedcsConfig, FedcsOrder};
pub use history::SelectorState;
pub use mda::{mda_weights, MdaConfig};
pub use sampling::{select_random, weighted_sample_without_replacement};
pub use tifl::{assign_tiers, select_tifl, select_tifl_mda, tier_probabilities, TiflConfig, Tiers};

/// Dense client index, `0..num_clients`.
pub type ClientId = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectorError {
    /// Nothing to select from; the engine turns this into a skipped round.
    #[error("no eligible candidates")]
    NoCandidates,
    #[error("history update for round {got}, expected round {expected}")]
    RoundOrder { expected: usize, got: usize },
    #[error("round start time {got} is not after the previous start {previous}")]
    ClockNotIncreasing { previous: f64, got: f64 },
    #[error("availability vector has {got} entries, expected {expected}")]
    AvailabilityLength { expected: usize, got: usize },
    #[error("failures reported before the first round")]
    FailureBeforeFirstRound,
    #[error("client {client} reported failing round {round} while unavailable at its start")]
    FailureWhileUnavailable { client: ClientId, round: usize },
    #[error("client {client} reported failing twice in one round")]
    DuplicateFailure { client: ClientId },
    #[error("unknown client {0}")]
    UnknownClient(ClientId),
    #[error("cannot build {tiers} tiers from {clients} clients")]
    TooManyTiers { tiers: usize, clients: usize },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Random,
    Fedcs,
    Tifl,
    Mda,
    TiflMda,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 5] = [
        SelectorKind::Random,
        SelectorKind::Fedcs,
        SelectorKind::Tifl,
        SelectorKind::Mda,
        SelectorKind::TiflMda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectorKind::Random => "random",
            SelectorKind::Fedcs => "fedcs",
            SelectorKind::Tifl => "tifl",
            SelectorKind::Mda => "mda",
            SelectorKind::TiflMda => "tifl_mda",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectorKind {
    type Err = SelectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                SelectorError::Config(format!(
                    "unknown selector `{s}` (expected random, fedcs, tifl, mda or tifl_mda)"
                ))
            })
    }
}

/// Parameters for every strategy; only the ones the chosen kind uses matter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectorParams {
    pub mda: MdaConfig,
    pub fedcs: FedcsConfig,
    pub tifl: TiflConfig,
}

impl SelectorParams {
    pub fn validate(&self) -> Result<(), SelectorError> {
        self.mda.validate()?;
        self.fedcs.validate()?;
        self.tifl.validate()
    }
}

/// A configured strategy with any precomputed per-client data (round-time
/// estimates, tiers).
#[derive(Debug, Clone)]
pub struct Selector {
    kind: SelectorKind,
    params: SelectorParams,
    round_times: Vec<f64>,
    tiers: Option<(Tiers, Vec<f64>)>,
}

impl Selector {
    /// `round_times[c]` is the estimated round time of client `c`.
    pub fn new(
        kind: SelectorKind,
        params: SelectorParams,
        round_times: Vec<f64>,
    ) -> Result<Self, SelectorError> {
        params.validate()?;
        let tiers = match kind {
            SelectorKind::Tifl | SelectorKind::TiflMda => {
                let tiers = assign_tiers(&round_times, params.tifl.num_tiers)?;
                let probs = tier_probabilities(params.tifl.num_tiers, params.tifl.ratio);
                Some((tiers, probs))
            }
            _ => None,
        };
        Ok(Self {
            kind,
            params,
            round_times,
            tiers,
        })
    }

    pub fn kind(&self) -> SelectorKind {
        self.kind
    }

    pub fn tiers(&self) -> Option<&Tiers> {
        self.tiers.as_ref().map(|(t, _)| t)
    }

    /// Pick up to `n` of the `available` clients. `available` must be sorted.
    pub fn select<R: Rng + ?Sized>(
        &self,
        available: &[ClientId],
        n: usize,
        state: &SelectorState,
        rng: &mut R,
    ) -> Result<Vec<ClientId>, SelectorError> {
        match self.kind {
            SelectorKind::Random => select_random(available, n, rng),
            SelectorKind::Fedcs => {
                select_fedcs(available, n, &self.params.fedcs, &self.round_times, rng)
            }
            SelectorKind::Mda => {
                if available.is_empty() {
                    return Err(SelectorError::NoCandidates);
                }
                let weights = mda_weights(state, available, &self.params.mda);
                weighted_sample_without_replacement(available, &weights, n, rng)
            }
            SelectorKind::Tifl => {
                let (tiers, probs) = self.tiers.as_ref().expect("tiers built for tifl");
                select_tifl(available, n, tiers, probs, rng)
            }
            SelectorKind::TiflMda => {
                let (tiers, probs) = self.tiers.as_ref().expect("tiers built for tifl_mda");
                select_tifl_mda(available, n, tiers, probs, state, &self.params.mda, rng)
            }
        }
    }
}
