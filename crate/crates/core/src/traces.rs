//! Client availability traces: querying, statistics, ranking, scenario
//! construction, synthetic generation, and the line-based trace file format.
//!
//! A trace is piecewise constant. A transition at time `τ` flips the state for
//! every query `t >= τ`, so intervals are half-open `[τ_i, τ_{i+1})`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded_rng;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("query time {t} outside trace range [0, {horizon}]")]
    OutOfRange { t: f64, horizon: f64 },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("transitions must be strictly increasing (index {index}: {value})")]
    NonMonotone { index: usize, value: f64 },
    #[error("transition {value} outside [0, {horizon}]")]
    TransitionOutOfRange { value: f64, horizon: f64 },
    #[error("cannot rank an empty trace list")]
    Empty,
    #[error("scenario needs {required} traces but only {available} are available")]
    InsufficientTraces { required: usize, available: usize },
    #[error("invalid scenario: {0}")]
    BadScenario(String),
    #[error("invalid trace class parameters: {0}")]
    BadParams(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("all traces in one file must share a horizon ({expected} vs {found})")]
    MixedHorizon { expected: f64, found: f64 },
}

/// Piecewise-constant availability of a single client over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvailabilityTrace {
    start_available: bool,
    transitions: Vec<f64>,
    horizon: f64,
}

impl AvailabilityTrace {
    pub fn new(
        start_available: bool,
        transitions: Vec<f64>,
        horizon: f64,
    ) -> Result<Self, TraceError> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(TraceError::BadHorizon(horizon));
        }
        for (i, &t) in transitions.iter().enumerate() {
            if !(0.0..=horizon).contains(&t) {
                return Err(TraceError::TransitionOutOfRange { value: t, horizon });
            }
            if i > 0 && t <= transitions[i - 1] {
                return Err(TraceError::NonMonotone { index: i, value: t });
            }
        }
        Ok(Self {
            start_available,
            transitions,
            horizon,
        })
    }

    /// A trace that is available over the whole horizon.
    pub fn always_on(horizon: f64) -> Self {
        Self::new(true, Vec::new(), horizon).expect("positive horizon")
    }

    pub fn start_available(&self) -> bool {
        self.start_available
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn state_unchecked(&self, t: f64) -> bool {
        let flips = self.transitions.partition_point(|&x| x <= t);
        self.start_available ^ (flips % 2 == 1)
    }

    /// Availability at time `t`.
    pub fn is_available(&self, t: f64) -> Result<bool, TraceError> {
        self.check_range(t)?;
        Ok(self.state_unchecked(t))
    }

    /// Whether the client is unavailable at any instant of `(from, to]`.
    pub fn unavailable_within(&self, from: f64, to: f64) -> Result<bool, TraceError> {
        self.check_range(from)?;
        self.check_range(to)?;
        if !self.state_unchecked(from) {
            // the state holds on (from, next transition), a non-empty interval
            return Ok(true);
        }
        let first_after = self.transitions.partition_point(|&x| x <= from);
        Ok(self
            .transitions
            .get(first_after)
            .is_some_and(|&tau| tau <= to))
    }

    fn check_range(&self, t: f64) -> Result<(), TraceError> {
        if (0.0..=self.horizon).contains(&t) {
            Ok(())
        } else {
            Err(TraceError::OutOfRange {
                t,
                horizon: self.horizon,
            })
        }
    }

    pub fn stats(&self) -> TraceStats {
        trace_stats(self)
    }
}

/// Availability percentage and fluctuation of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub available_fraction: f64,
    /// Flips per hour.
    pub transition_rate: f64,
}

pub fn trace_stats(trace: &AvailabilityTrace) -> TraceStats {
    let mut state = trace.start_available;
    let mut last = 0.0;
    let mut up = 0.0;
    for &t in &trace.transitions {
        if state {
            up += t - last;
        }
        state = !state;
        last = t;
    }
    if state {
        up += trace.horizon - last;
    }
    TraceStats {
        available_fraction: up / trace.horizon,
        transition_rate: trace.transitions.len() as f64 / (trace.horizon / 3600.0),
    }
}

/// Indices of `traces` ordered from worst to best availability.
///
/// Lower available fraction is worse; on ties a higher transition rate is
/// worse; remaining ties keep the original order.
pub fn rank_traces(traces: &[AvailabilityTrace]) -> Result<Vec<usize>, TraceError> {
    if traces.is_empty() {
        return Err(TraceError::Empty);
    }
    let stats: Vec<TraceStats> = traces.iter().map(trace_stats).collect();
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&stats[a], &stats[b]);
        sa.available_fraction
            .total_cmp(&sb.available_fraction)
            .then_with(|| sb.transition_rate.total_cmp(&sa.transition_rate))
            .then(a.cmp(&b))
    });
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Low,
    Average,
    High,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::Low => "low",
            ScenarioKind::Average => "average",
            ScenarioKind::High => "high",
        })
    }
}

impl ScenarioKind {
    /// Block (0 = worst, 1 = middle, 2 = best) that receives the major share.
    fn major_block(self) -> usize {
        match self {
            ScenarioKind::Low => 0,
            ScenarioKind::Average => 1,
            ScenarioKind::High => 2,
        }
    }
}

/// How many clients to draw and how the draw is split over the three blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub num_clients: usize,
    /// (major, other1, other2); the two minor shares go to the remaining
    /// blocks in ascending block order.
    pub mix: [f64; 3],
}

impl ScenarioSpec {
    pub const DEFAULT_MIX: [f64; 3] = [0.6, 0.2, 0.2];

    pub fn new(kind: ScenarioKind, num_clients: usize) -> Self {
        Self {
            kind,
            num_clients,
            mix: Self::DEFAULT_MIX,
        }
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.num_clients == 0 {
            return Err(TraceError::BadScenario("num_clients must be >= 1".into()));
        }
        if self.mix.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(TraceError::BadScenario(format!(
                "mix fractions must lie in [0, 1], got {:?}",
                self.mix
            )));
        }
        let sum: f64 = self.mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TraceError::BadScenario(format!(
                "mix fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// Client counts per block (worst, middle, best).
    ///
    /// The major share is `round(major * n)`; the rest is split between the
    /// two other blocks in proportion to their fractions, rounding down for
    /// the earlier block so the remainder lands in the later one.
    pub fn block_counts(&self) -> [usize; 3] {
        let n = self.num_clients;
        let major = ((self.mix[0] * n as f64).round() as usize).min(n);
        let rest = n - major;
        let minor_total = self.mix[1] + self.mix[2];
        let first_minor = if minor_total > 0.0 {
            (rest as f64 * self.mix[1] / minor_total).floor() as usize
        } else {
            0
        };
        let second_minor = rest - first_minor;

        let major_block = self.kind.major_block();
        let mut counts = [0; 3];
        counts[major_block] = major;
        let mut minors = (0..3).filter(|&b| b != major_block);
        counts[minors.next().unwrap()] = first_minor;
        counts[minors.next().unwrap()] = second_minor;
        counts
    }
}

/// Half-open index ranges of the worst, middle, and best blocks of a ranked
/// list of `len` traces. Blocks have equal size `len / 3`; the middle block is
/// centred.
pub fn block_ranges(len: usize) -> [std::ops::Range<usize>; 3] {
    let size = len / 3;
    let mid_start = (len - size) / 2;
    [0..size, mid_start..mid_start + size, len - size..len]
}

/// Positions in a ranked list of `ranked_len` traces chosen for each client.
pub fn scenario_positions(
    ranked_len: usize,
    spec: &ScenarioSpec,
    rng_seed: u64,
) -> Result<Vec<usize>, TraceError> {
    spec.validate()?;
    if ranked_len < spec.num_clients {
        return Err(TraceError::InsufficientTraces {
            required: spec.num_clients,
            available: ranked_len,
        });
    }
    let counts = spec.block_counts();
    let blocks = block_ranges(ranked_len);
    let mut rng = seeded_rng(rng_seed);
    let mut picked = Vec::with_capacity(spec.num_clients);
    for (block, &count) in blocks.iter().zip(&counts) {
        if count > block.len() {
            return Err(TraceError::InsufficientTraces {
                required: count,
                available: block.len(),
            });
        }
        let chosen = rand::seq::index::sample(&mut rng, block.len(), count);
        picked.extend(chosen.into_iter().map(|i| block.start + i));
    }
    picked.shuffle(&mut rng);
    Ok(picked)
}

/// Assign traces from a worst-to-best ranked list to `spec.num_clients`
/// clients.
pub fn build_scenario(
    ranked: &[AvailabilityTrace],
    spec: &ScenarioSpec,
    rng_seed: u64,
) -> Result<Vec<AvailabilityTrace>, TraceError> {
    let positions = scenario_positions(ranked.len(), spec, rng_seed)?;
    Ok(positions.into_iter().map(|p| ranked[p].clone()).collect())
}

/// On/off renewal parameters for synthetic traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceClassParams {
    pub mean_up_s: f64,
    pub mean_down_s: f64,
    pub start_available_prob: f64,
}

impl TraceClassParams {
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.mean_up_s > 0.0 && self.mean_down_s > 0.0) {
            return Err(TraceError::BadParams(format!(
                "mean durations must be positive (up {}, down {})",
                self.mean_up_s, self.mean_down_s
            )));
        }
        if !(0.0..=1.0).contains(&self.start_available_prob) {
            return Err(TraceError::BadParams(format!(
                "start_available_prob {} not in [0, 1]",
                self.start_available_prob
            )));
        }
        Ok(())
    }
}

/// Synthetic trace with exponentially distributed up and down periods.
pub fn generate_trace(
    params: &TraceClassParams,
    horizon: f64,
    rng_seed: u64,
) -> Result<AvailabilityTrace, TraceError> {
    params.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(TraceError::BadHorizon(horizon));
    }
    let up = Exp::new(1.0 / params.mean_up_s).map_err(|e| TraceError::BadParams(e.to_string()))?;
    let down =
        Exp::new(1.0 / params.mean_down_s).map_err(|e| TraceError::BadParams(e.to_string()))?;
    let mut rng = seeded_rng(rng_seed);
    let start = rng.random_bool(params.start_available_prob);
    let mut state = start;
    let mut t = 0.0;
    let mut transitions = Vec::new();
    loop {
        let next = t + if state { up.sample(&mut rng) } else { down.sample(&mut rng) };
        if next > horizon {
            break;
        }
        // a zero-length period would break strict monotonicity; absorb it
        if next <= t {
            continue;
        }
        transitions.push(next);
        t = next;
        state = !state;
    }
    AvailabilityTrace::new(start, transitions, horizon)
}

/// A trace with the client identifier it was stored under.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTrace {
    pub id: String,
    pub trace: AvailabilityTrace,
}

/// Parse the line-based trace format:
///
/// ```text
/// !horizon 86400
/// # comment
/// c1 1 100 250
/// ```
pub fn parse_trace_file(text: &str) -> Result<Vec<NamedTrace>, TraceError> {
    let mut horizon = None;
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let parse_err = |message: String| TraceError::Parse {
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line");
        if head == "!horizon" {
            let value = fields
                .next()
                .ok_or_else(|| parse_err("missing horizon value".into()))?;
            let h: f64 = value
                .parse()
                .map_err(|_| parse_err(format!("bad horizon `{value}`")))?;
            if fields.next().is_some() {
                return Err(parse_err("trailing fields after horizon".into()));
            }
            if !(h > 0.0 && h.is_finite()) {
                return Err(parse_err(format!("horizon must be positive, got {h}")));
            }
            if horizon.is_some() {
                return Err(parse_err("duplicate horizon header".into()));
            }
            horizon = Some(h);
            continue;
        }
        let h = horizon.ok_or_else(|| parse_err("trace line before `!horizon` header".into()))?;
        let state = fields
            .next()
            .ok_or_else(|| parse_err("missing start state".into()))?;
        let start = match state {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(format!("start state must be 0 or 1, got `{other}`"))),
        };
        let transitions = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| parse_err(format!("bad timestamp `{f}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let trace = AvailabilityTrace::new(start, transitions, h).map_err(|e| match e {
            TraceError::NonMonotone { index, value } => parse_err(format!(
                "non-monotone timestamps: {value} at position {} is not after its predecessor",
                index + 1
            )),
            other => parse_err(other.to_string()),
        })?;
        out.push(NamedTrace {
            id: head.to_string(),
            trace,
        });
    }
    Ok(out)
}

pub fn serialize_trace_file(traces: &[NamedTrace]) -> Result<String, TraceError> {
    let mut out = String::new();
    let Some(first) = traces.first() else {
        return Ok(out);
    };
    let horizon = first.trace.horizon;
    writeln!(out, "!horizon {horizon}").unwrap();
    for named in traces {
        if named.trace.horizon.partial_cmp(&horizon) != Some(Ordering::Equal) {
            return Err(TraceError::MixedHorizon {
                expected: horizon,
                found: named.trace.horizon,
            });
        }
        write!(out, "{} {}", named.id, u8::from(named.trace.start_available)).unwrap();
        for t in &named.trace.transitions {
            write!(out, " {t}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}
