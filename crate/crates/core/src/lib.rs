//! Deterministic simulator of cross-device federated learning for comparing
//! client selection strategies under client unavailability and hardware
//! heterogeneity.
//!
//! The crate is organised bottom-up:
//!
//! * [`traces`]: availability traces, ranking, and low/average/high scenarios.
//! * [`cost`]: client capabilities and per-round time.
//! * [`selectors`]: Random, FedCS, TiFL, MDA, and TiFL-MDA.
//! * [`learning`]: synthetic data, Dirichlet partition, local training, FedAvg.
//! * [`engine`]: the round loop, experiments, and selector comparisons.
//! * [`config`], [`report`], [`cli`]: configuration, outputs, and commands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod cost;
pub mod engine;
pub mod learning;
pub mod report;
pub mod rng;
pub mod selectors;
pub mod traces;

pub use config::{load_config, ExperimentConfig};
pub use engine::{compare_selectors, run_experiment, Comparison, EngineError, World};
pub use report::{ExperimentReport, RoundOutcome, Summary};
pub use selectors::{SelectorKind, SelectorState};
pub use traces::{AvailabilityTrace, ScenarioKind};
