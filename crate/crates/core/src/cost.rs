//! Per-client round time from hardware capability and task dimensions.
//!
//! The same formula is the simulator's ground truth and the estimate used by
//! the resource-aware selectors.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded_rng;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("client {0} has no sample count assigned")]
    UnsetSamples(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid capability bounds: {0}")]
    BadBounds(String),
    #[error("invalid task dimensions: {0}")]
    BadDims(String),
}

/// Hardware capability of one client plus the size of its local shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientProfile {
    pub client_id: String,
    /// Seconds per training sample per epoch.
    pub time_per_sample: f64,
    /// Download bandwidth in bytes per second.
    pub down_bw: f64,
    /// Upload bandwidth in bytes per second.
    pub up_bw: f64,
    /// Filled in once the data is partitioned.
    pub num_samples: Option<usize>,
}

impl ClientProfile {
    pub fn new(client_id: impl Into<String>, time_per_sample: f64, down_bw: f64, up_bw: f64) -> Self {
        Self {
            client_id: client_id.into(),
            time_per_sample,
            down_bw,
            up_bw,
            num_samples: None,
        }
    }

    pub fn with_samples(mut self, num_samples: usize) -> Self {
        self.num_samples = Some(num_samples);
        self
    }

    fn is_valid(&self) -> bool {
        [self.time_per_sample, self.down_bw, self.up_bw]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskDims {
    pub model_size_bytes: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
}

impl TaskDims {
    pub fn validate(&self) -> Result<(), CostError> {
        if !(self.model_size_bytes > 0.0) {
            return Err(CostError::BadDims("model_size_bytes must be positive".into()));
        }
        if self.local_epochs == 0 || self.batch_size == 0 {
            return Err(CostError::BadDims(
                "local_epochs and batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Download + local compute + upload time, in seconds.
pub fn round_time(profile: &ClientProfile, dims: &TaskDims) -> Result<f64, CostError> {
    let samples = profile
        .num_samples
        .ok_or_else(|| CostError::UnsetSamples(profile.client_id.clone()))?;
    let download = dims.model_size_bytes / profile.down_bw;
    let compute = dims.local_epochs as f64 * samples as f64 * profile.time_per_sample;
    let upload = dims.model_size_bytes / profile.up_bw;
    Ok(download + compute + upload)
}

/// Parse `<client_id> <time_per_sample_s> <down_bw_Bps> <up_bw_Bps>` lines.
pub fn parse_capability_file(text: &str) -> Result<Vec<ClientProfile>, CostError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| CostError::Parse {
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("bad {what} `{s}`")))
        };
        let profile = ClientProfile::new(
            fields[0],
            num(fields[1], "time_per_sample")?,
            num(fields[2], "down_bw")?,
            num(fields[3], "up_bw")?,
        );
        if !profile.is_valid() {
            return Err(err("capabilities must be positive and finite".into()));
        }
        out.push(profile);
    }
    Ok(out)
}

pub fn serialize_capability_file(profiles: &[ClientProfile]) -> String {
    profiles
        .iter()
        .map(|p| format!("{} {} {} {}\n", p.client_id, p.time_per_sample, p.down_bw, p.up_bw))
        .collect()
}

/// Inclusive bounds for log-uniform capability generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapabilityBounds {
    pub time_per_sample_s: [f64; 2],
    pub down_bw_bps: [f64; 2],
    pub up_bw_bps: [f64; 2],
}

impl Default for CapabilityBounds {
    fn default() -> Self {
        Self {
            time_per_sample_s: [0.2, 2.0],
            down_bw_bps: [100.0, 1000.0],
            up_bw_bps: [50.0, 500.0],
        }
    }
}

impl CapabilityBounds {
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, [lo, hi]) in [
            ("time_per_sample_s", self.time_per_sample_s),
            ("down_bw_bps", self.down_bw_bps),
            ("up_bw_bps", self.up_bw_bps),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(CostError::BadBounds(format!(
                    "{name} must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

fn log_uniform<R: Rng>(rng: &mut R, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        return lo;
    }
    let x = rng.random_range(lo.ln()..=hi.ln()).exp();
    x.clamp(lo, hi)
}

/// `n` profiles with capabilities drawn log-uniformly within `bounds`.
pub fn generate_profiles(
    n: usize,
    bounds: &CapabilityBounds,
    seed: u64,
) -> Result<Vec<ClientProfile>, CostError> {
    bounds.validate()?;
    let mut rng = seeded_rng(seed);
    Ok((0..n)
        .map(|i| {
            let tps = log_uniform(&mut rng, bounds.time_per_sample_s);
            let down = log_uniform(&mut rng, bounds.down_bw_bps);
            let up = log_uniform(&mut rng, bounds.up_bw_bps);
            ClientProfile::new(format!("c{i}"), tps, down, up)
        })
        .collect())
}
