//! The round loop and experiment orchestration.
//!
//! A [`World`] (client traces, capabilities, data shards) is built once from
//! the scenario and partition seeds and can be shared by any number of
//! selector runs. Each run owns its selector state, model, clock, and RNG.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ExperimentConfig, RoundConfig, TraceSource};
use crate::cost::{generate_profiles, parse_capability_file, round_time, ClientProfile, CostError, TaskDims};
use crate::learning::{
    dirichlet_partition, evaluate, fedavg, local_train, Dataset, LearningError, LinearModel,
    LocalTraining, PartitionConfig,
};
use crate::report::{ExperimentReport, RoundOutcome, Summary};
use crate::rng::{derive_seed, seeded_rng, stream, SimRng};
use crate::selectors::{ClientId, Selector, SelectorError, SelectorKind, SelectorParams, SelectorState};
use crate::traces::{
    build_scenario, generate_trace, parse_trace_file, rank_traces, serialize_trace_file,
    AvailabilityTrace, NamedTrace, TraceError,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(
        "simulated clock reached {needed:.1} s but client traces end at {horizon:.1} s; \
         use a longer trace horizon or fewer rounds"
    )]
    HorizonExceeded { needed: f64, horizon: f64 },
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Setup(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Learning(#[from] LearningError),
}

/// Clients, their data, and their estimated round times. Independent of the
/// availability traces.
#[derive(Debug, Clone)]
pub struct Population {
    pub profiles: Vec<ClientProfile>,
    pub dataset: Dataset,
    pub shards: Vec<Vec<usize>>,
    pub dims: TaskDims,
    pub round_times: Vec<f64>,
}

impl Population {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, EngineError> {
        let n = cfg.population.num_clients;
        let dataset = cfg.task.synthetic().generate(cfg.task.seed)?;
        let shards = dirichlet_partition(
            &dataset.train,
            dataset.num_classes,
            &PartitionConfig {
                num_clients: n,
                alpha: cfg.task.alpha,
                seed: derive_seed(cfg.seeds.partition_seed, &[stream::PARTITION]),
            },
        )?;
        let profiles = match &cfg.population.capability_file {
            Some(path) => {
                let path = cfg.resolve(path);
                let text = std::fs::read_to_string(&path).map_err(|source| EngineError::Io {
                    path: path.clone(),
                    source,
                })?;
                let mut profiles = parse_capability_file(&text)?;
                if profiles.len() < n {
                    return Err(EngineError::Setup(format!(
                        "capability file {} has {} clients, need {n}",
                        path.display(),
                        profiles.len()
                    )));
                }
                profiles.truncate(n);
                profiles
            }
            None => generate_profiles(
                n,
                &cfg.population.capabilities,
                derive_seed(cfg.seeds.scenario_seed, &[stream::PROFILES]),
            )?,
        };
        let dims = TaskDims {
            model_size_bytes: LinearModel::zeros(dataset.num_classes, dataset.dim()).size_bytes() as f64,
            local_epochs: cfg.task.epochs,
            batch_size: cfg.task.batch_size,
        };
        Self::from_parts(profiles, dataset, shards, dims)
    }

    /// Attach shard sizes to the profiles and compute round times.
    pub fn from_parts(
        profiles: Vec<ClientProfile>,
        dataset: Dataset,
        shards: Vec<Vec<usize>>,
        dims: TaskDims,
    ) -> Result<Self, EngineError> {
        dims.validate()?;
        if profiles.len() != shards.len() {
            return Err(EngineError::Setup(format!(
                "{} profiles but {} shards",
                profiles.len(),
                shards.len()
            )));
        }
        let profiles: Vec<ClientProfile> = profiles
            .into_iter()
            .zip(&shards)
            .map(|(p, s)| p.with_samples(s.len()))
            .collect();
        let round_times = profiles
            .iter()
            .map(|p| round_time(p, &dims))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            profiles,
            dataset,
            shards,
            dims,
            round_times,
        })
    }

    pub fn num_clients(&self) -> usize {
        self.profiles.len()
    }

    pub fn slowest_round_time(&self) -> f64 {
        self.round_times.iter().copied().fold(0.0, f64::max)
    }
}

/// Trace pool generation or loading, before ranking.
pub fn load_trace_pool(cfg: &ExperimentConfig) -> Result<Vec<AvailabilityTrace>, EngineError> {
    let s = &cfg.scenario;
    match s.source {
        TraceSource::Synthetic => (0..s.pool_size)
            .map(|i| {
                let class = &s.classes[i % s.classes.len()];
                let seed = derive_seed(cfg.seeds.scenario_seed, &[stream::TRACE_POOL, i as u64]);
                generate_trace(class, s.horizon_s, seed).map_err(EngineError::from)
            })
            .collect(),
        TraceSource::File => {
            let path = cfg.resolve(
                s.trace_file
                    .as_deref()
                    .ok_or_else(|| EngineError::Setup("scenario.trace_file is not set".into()))?,
            );
            let text = std::fs::read_to_string(&path).map_err(|source| EngineError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(parse_trace_file(&text)?.into_iter().map(|t| t.trace).collect())
        }
    }
}

/// Everything a run needs that does not depend on the selector or run seed.
#[derive(Debug, Clone)]
pub struct World {
    pub population: Population,
    /// `traces[c]` is the availability of client `c`.
    pub traces: Vec<AvailabilityTrace>,
}

impl World {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, EngineError> {
        let population = Population::build(cfg)?;
        let pool = load_trace_pool(cfg)?;
        let order = rank_traces(&pool)?;
        let ranked: Vec<AvailabilityTrace> = order.into_iter().map(|i| pool[i].clone()).collect();
        let traces = build_scenario(
            &ranked,
            &cfg.scenario_spec(),
            derive_seed(cfg.seeds.scenario_seed, &[stream::SCENARIO]),
        )?;
        Self::new(population, traces)
    }

    pub fn new(population: Population, traces: Vec<AvailabilityTrace>) -> Result<Self, EngineError> {
        if traces.len() != population.num_clients() {
            return Err(EngineError::Setup(format!(
                "{} traces for {} clients",
                traces.len(),
                population.num_clients()
            )));
        }
        Ok(Self { population, traces })
    }

    pub fn num_clients(&self) -> usize {
        self.traces.len()
    }

    /// SHA-256 of the client-to-trace assignment in trace file form.
    pub fn trace_digest(&self) -> String {
        let named: Vec<NamedTrace> = self
            .traces
            .iter()
            .enumerate()
            .map(|(i, t)| NamedTrace {
                id: format!("c{i}"),
                trace: t.clone(),
            })
            .collect();
        // traces from one pool share a horizon; fall back to debug form if not
        let text = serialize_trace_file(&named).unwrap_or_else(|_| format!("{:?}", self.traces));
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn simulation(
        &self,
        kind: SelectorKind,
        params: &SelectorParams,
        round: &RoundConfig,
        training: LocalTraining,
        run_seed: u64,
    ) -> Result<Simulation<'_>, EngineError> {
        Simulation::new(self, kind, params, round, training, run_seed)
    }

    /// Run every round and collect the report.
    pub fn run(
        &self,
        kind: SelectorKind,
        params: &SelectorParams,
        round: &RoundConfig,
        training: LocalTraining,
        run_seed: u64,
    ) -> Result<ExperimentReport, EngineError> {
        let mut sim = self.simulation(kind, params, round, training, run_seed)?;
        for _ in 0..round.num_rounds {
            sim.run_round()?;
        }
        Ok(sim.finish())
    }
}

/// State of one in-progress run.
#[derive(Debug)]
pub struct Simulation<'w> {
    world: &'w World,
    round_cfg: RoundConfig,
    training: LocalTraining,
    selector: Selector,
    state: SelectorState,
    model: LinearModel,
    clock: f64,
    pending_failures: Vec<ClientId>,
    rng: SimRng,
    run_seed: u64,
    log: Vec<RoundOutcome>,
}

impl<'w> Simulation<'w> {
    pub fn new(
        world: &'w World,
        kind: SelectorKind,
        params: &SelectorParams,
        round: &RoundConfig,
        training: LocalTraining,
        run_seed: u64,
    ) -> Result<Self, EngineError> {
        if round.clients_per_round == 0 || !(round.timeout_s > 0.0) || round.eval_every == 0 {
            return Err(EngineError::Setup(
                "clients_per_round, timeout_s and eval_every must be positive".into(),
            ));
        }
        let selector = Selector::new(kind, params.clone(), world.population.round_times.clone())?;
        let data = &world.population.dataset;
        Ok(Self {
            world,
            round_cfg: round.clone(),
            training,
            selector,
            state: SelectorState::new(world.num_clients()),
            model: LinearModel::zeros(data.num_classes, data.dim()),
            clock: 0.0,
            pending_failures: Vec::new(),
            rng: seeded_rng(derive_seed(run_seed, &[stream::SELECTION])),
            run_seed,
            log: Vec::new(),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn state(&self) -> &SelectorState {
        &self.state
    }

    pub fn log(&self) -> &[RoundOutcome] {
        &self.log
    }

    fn check_horizon(&self, t: f64) -> Result<(), EngineError> {
        let horizon = self
            .world
            .traces
            .iter()
            .map(AvailabilityTrace::horizon)
            .fold(f64::INFINITY, f64::min);
        if t > horizon {
            Err(EngineError::HorizonExceeded { needed: t, horizon })
        } else {
            Ok(())
        }
    }

    /// Advance one round: ping clients, select, detect failures, aggregate
    /// the survivors, advance the clock.
    pub fn run_round(&mut self) -> Result<&RoundOutcome, EngineError> {
        let round = self.log.len();
        let start = self.clock;
        let timeout = self.round_cfg.timeout_s;
        self.check_horizon(start)?;

        let availability: Vec<bool> = self
            .world
            .traces
            .iter()
            .map(|t| t.is_available(start))
            .collect::<Result<_, _>>()?;
        let failures = std::mem::take(&mut self.pending_failures);
        self.state.update_history(round, start, &availability, &failures)?;
        let available: Vec<ClientId> = (0..availability.len()).filter(|&c| availability[c]).collect();

        let selected = match self.selector.select(
            &available,
            self.round_cfg.clients_per_round,
            &self.state,
            &mut self.rng,
        ) {
            Ok(s) => s,
            Err(SelectorError::NoCandidates) => Vec::new(),
            Err(e) => return Err(e.into()),
        };

        let mut failed = Vec::new();
        let mut slowest: f64 = 0.0;
        for &c in &selected {
            let t_c = self.world.population.round_times[c];
            let window_end = start + t_c.min(timeout);
            self.check_horizon(window_end)?;
            if t_c > timeout || self.world.traces[c].unavailable_within(start, window_end)? {
                failed.push(c);
            }
            slowest = slowest.max(t_c);
        }
        let skipped = selected.is_empty();
        let duration = if skipped || !failed.is_empty() { timeout } else { slowest };

        let pop = &self.world.population;
        let deltas: Vec<Vec<f64>> = selected
            .iter()
            .filter(|c| !failed.contains(c))
            .map(|&c| {
                let seed = derive_seed(self.run_seed, &[stream::TRAINING, c as u64, round as u64]);
                local_train(&self.model, &pop.dataset.train, &pop.shards[c], &self.training, seed).delta
            })
            .collect();
        if let Some(mean) = fedavg(&deltas)? {
            self.model.apply_delta(&mean)?;
        }

        let is_last = round + 1 == self.round_cfg.num_rounds;
        let accuracy = ((round + 1).is_multiple_of(self.round_cfg.eval_every) || is_last)
            .then(|| evaluate(&self.model, &pop.dataset.test));

        self.clock = start + duration;
        self.pending_failures = failed.clone();
        self.log.push(RoundOutcome {
            round,
            start_s: start,
            duration_s: duration,
            selected,
            failed,
            skipped,
            accuracy,
        });
        Ok(self.log.last().expect("just pushed"))
    }

    pub fn finish(self) -> ExperimentReport {
        let accuracy = evaluate(&self.model, &self.world.population.dataset.test) * 100.0;
        ExperimentReport::from_rounds(self.selector.kind(), self.run_seed, accuracy, self.log)
    }
}

pub fn local_training(cfg: &ExperimentConfig) -> LocalTraining {
    LocalTraining {
        epochs: cfg.task.epochs,
        batch_size: cfg.task.batch_size,
        lr: cfg.task.lr,
    }
}

/// Build the world and run the configured selector with one run seed.
pub fn run_experiment(cfg: &ExperimentConfig, run_seed: u64) -> Result<ExperimentReport, EngineError> {
    let world = World::build(cfg)?;
    world.run(
        cfg.selector.kind,
        &cfg.selector.params(),
        &cfg.round,
        local_training(cfg),
        run_seed,
    )
}

/// All runs of one selector in a comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorResult {
    pub selector: SelectorKind,
    pub summary: Summary,
    pub reports: Vec<ExperimentReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub trace_digest: String,
    pub results: Vec<SelectorResult>,
    /// Index into `results` of the lowest mean training time.
    pub fastest: usize,
}

impl Comparison {
    pub fn result(&self, kind: SelectorKind) -> Option<&SelectorResult> {
        self.results.iter().find(|r| r.selector == kind)
    }
}

/// Run every `(selector, seed)` cell on one shared world. Cells run on up to
/// `jobs` threads; results are ordered by selector then seed.
pub fn compare_selectors(
    cfg: &ExperimentConfig,
    selectors: &[SelectorKind],
    seeds: &[u64],
    jobs: usize,
) -> Result<Comparison, EngineError> {
    if selectors.is_empty() || seeds.is_empty() {
        return Err(EngineError::Setup("need at least one selector and one seed".into()));
    }
    let world = World::build(cfg)?;
    compare_on_world(&world, cfg, selectors, seeds, jobs)
}

pub fn compare_on_world(
    world: &World,
    cfg: &ExperimentConfig,
    selectors: &[SelectorKind],
    seeds: &[u64],
    jobs: usize,
) -> Result<Comparison, EngineError> {
    let cells: Vec<(SelectorKind, u64)> = selectors
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let params = cfg.selector.params();
    let training = local_training(cfg);
    let run_cell = |&(kind, seed): &(SelectorKind, u64)| world.run(kind, &params, &cfg.round, training, seed);
    let reports: Vec<ExperimentReport> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| EngineError::Setup(e.to_string()))?;
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_, _>>())?
    } else {
        cells.iter().map(run_cell).collect::<Result<_, _>>()?
    };
    let mut reports = reports.into_iter();
    let results: Vec<SelectorResult> = selectors
        .iter()
        .map(|&kind| {
            let runs: Vec<ExperimentReport> = reports.by_ref().take(seeds.len()).collect();
            SelectorResult {
                selector: kind,
                summary: Summary::from_reports(&runs),
                reports: runs,
            }
        })
        .collect();
    let fastest = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.summary.training_time().total_cmp(&b.1.summary.training_time()))
        .map(|(i, _)| i)
        .expect("non-empty");
    Ok(Comparison {
        trace_digest: world.trace_digest(),
        results,
        fastest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::ClientProfile;
    use crate::learning::SyntheticTask;

    fn tiny_dataset() -> Dataset {
        SyntheticTask {
            num_samples: 200,
            features_d: 3,
            classes_k: 2,
            test_fraction: 0.2,
            class_separation: 2.0,
        }
        .generate(0)
        .unwrap()
    }

    /// Clients with the given compute-only round times (communication is
    /// made negligible but positive) and one training row each.
    fn fixture(times: &[f64], traces: Vec<AvailabilityTrace>) -> World {
        let data = tiny_dataset();
        let dims = TaskDims {
            model_size_bytes: 1.0,
            local_epochs: 1,
            batch_size: 4,
        };
        // bandwidth large enough that the communication terms are 2e-12 s
        let profiles = times
            .iter()
            .enumerate()
            .map(|(i, &t)| ClientProfile::new(format!("c{i}"), t, 1e12, 1e12))
            .collect();
        let shards = (0..times.len()).map(|i| vec![i]).collect();
        let pop = Population::from_parts(profiles, data, shards, dims).unwrap();
        World::new(pop, traces).unwrap()
    }

    fn round_cfg(n: usize, rounds: usize, timeout: f64) -> RoundConfig {
        RoundConfig {
            clients_per_round: n,
            num_rounds: rounds,
            timeout_s: timeout,
            eval_every: 1,
            strict_availability_failures: true,
        }
    }

    fn training() -> LocalTraining {
        LocalTraining {
            epochs: 1,
            batch_size: 4,
            lr: 0.1,
        }
    }

    #[test]
    fn no_failures_duration_is_slowest_client() {
        let world = fixture(&[5.0, 8.0], vec![AvailabilityTrace::always_on(1e6); 2]);
        let mut sim = world
            .simulation(SelectorKind::Random, &SelectorParams::default(), &round_cfg(2, 1, 860.0), training(), 1)
            .unwrap();
        let out = sim.run_round().unwrap().clone();
        assert_eq!(out.selected, vec![0, 1]);
        assert!(out.failed.is_empty());
        assert!((out.duration_s - 8.0).abs() < 1e-9);
        assert!((sim.clock() - out.duration_s).abs() < 1e-12);
    }

    #[test]
    fn mid_round_dropout_fails_and_times_out() {
        let flaky = AvailabilityTrace::new(true, vec![3.0], 1e6).unwrap();
        let world = fixture(&[5.0], vec![flaky]);
        let mut sim = world
            .simulation(SelectorKind::Random, &SelectorParams::default(), &round_cfg(1, 1, 860.0), training(), 1)
            .unwrap();
        let before = sim.model().clone();
        let out = sim.run_round().unwrap().clone();
        assert_eq!(out.failed, vec![0]);
        assert_eq!(out.duration_s, 860.0);
        assert_eq!(sim.model(), &before);
    }

    #[test]
    fn empty_pool_is_a_skipped_timeout_round() {
        let off = AvailabilityTrace::new(false, vec![], 1e6).unwrap();
        let world = fixture(&[5.0], vec![off]);
        let rep = world
            .run(SelectorKind::Mda, &SelectorParams::default(), &round_cfg(1, 3, 50.0), training(), 1)
            .unwrap();
        assert!(rep.rounds.iter().all(|r| r.skipped && r.duration_s == 50.0 && r.selected.is_empty()));
        assert_eq!(rep.training_time_s, 150.0);
        assert_eq!(rep.failed_rounds, 0);
    }

    #[test]
    fn failures_reach_the_selector_next_round() {
        let flaky = AvailabilityTrace::new(true, vec![3.0, 10.0], 1e6).unwrap();
        let world = fixture(&[5.0, 1.0], vec![flaky, AvailabilityTrace::always_on(1e6)]);
        let mut sim = world
            .simulation(SelectorKind::Random, &SelectorParams::default(), &round_cfg(2, 2, 20.0), training(), 1)
            .unwrap();
        sim.run_round().unwrap();
        sim.run_round().unwrap();
        assert_eq!(sim.state().failures(0), &[0]);
        assert!(sim.state().failures(1).is_empty());
        assert_eq!(sim.state().round_start_times(), &[0.0, 20.0]);
    }

    #[test]
    fn closed_form_training_time_when_always_available() {
        let times = [2.0, 3.0, 7.0];
        let world = fixture(&times, vec![AvailabilityTrace::always_on(1e6); 3]);
        let rep = world
            .run(SelectorKind::Random, &SelectorParams::default(), &round_cfg(3, 10, 100.0), training(), 4)
            .unwrap();
        assert_eq!(rep.failed_rounds, 0);
        // every round selects all three clients: 10 × 7 s, plus 4e-12 s of
        // communication per round
        assert!((rep.training_time_s - 70.0).abs() < 1e-9);
        assert_eq!(rep.total_participants, 30);
        assert_eq!(rep.unique_participants, 3);
    }

    #[test]
    fn zero_rounds_is_empty() {
        let world = fixture(&[1.0], vec![AvailabilityTrace::always_on(10.0)]);
        let rep = world
            .run(SelectorKind::Random, &SelectorParams::default(), &round_cfg(1, 0, 5.0), training(), 1)
            .unwrap();
        assert!(rep.rounds.is_empty());
        assert_eq!(rep.training_time_s, 0.0);
    }

    #[test]
    fn short_horizon_is_an_error() {
        let world = fixture(&[1.0], vec![AvailabilityTrace::always_on(10.0)]);
        let err = world
            .run(SelectorKind::Random, &SelectorParams::default(), &round_cfg(1, 20, 5.0), training(), 1)
            .unwrap_err();
        assert!(matches!(err, EngineError::HorizonExceeded { .. }), "{err}");
        assert!(err.to_string().contains("longer trace horizon"));
    }

    #[test]
    fn deltas_of_failed_clients_never_reach_the_model() {
        // client 1 drops at t = 0.5 in every run; compare with a world where
        // it is simply never selectable
        let drop = AvailabilityTrace::new(true, vec![0.5], 1e6).unwrap();
        let world = fixture(&[1.0, 1.0], vec![AvailabilityTrace::always_on(1e6), drop]);
        let mut sim = world
            .simulation(SelectorKind::Random, &SelectorParams::default(), &round_cfg(2, 1, 10.0), training(), 3)
            .unwrap();
        let out = sim.run_round().unwrap().clone();
        assert_eq!(out.failed, vec![1]);

        let data = &world.population.dataset;
        let expected = local_train(
            &LinearModel::zeros(data.num_classes, data.dim()),
            &data.train,
            &world.population.shards[0],
            &training(),
            derive_seed(3, &[stream::TRAINING, 0, 0]),
        );
        let mut model = LinearModel::zeros(data.num_classes, data.dim());
        model.apply_delta(&expected.delta).unwrap();
        assert_eq!(sim.model(), &model);
    }
}
