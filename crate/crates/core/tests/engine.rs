//! Engine properties on small generated worlds.

use fedsel::config::ExperimentConfig;
use fedsel::engine::{compare_on_world, compare_selectors, local_training, EngineError, World};
use fedsel::report::METRIC_LABELS;
use fedsel::{run_experiment, SelectorKind};
use proptest::prelude::*;

fn small_config(scenario_seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_toml_str(
        r#"
        [scenario]
        pool_size = 90
        horizon_s = 200000.0
        [population]
        num_clients = 30
        [round]
        clients_per_round = 5
        num_rounds = 40
        timeout_s = 900.0
        eval_every = 10
        [task]
        num_samples = 1200
        "#,
    )
    .unwrap();
    cfg.seeds.scenario_seed = scenario_seed;
    cfg.validate_fields().unwrap();
    cfg
}

#[test]
fn single_selector_single_seed_summary_is_the_report() {
    let cfg = small_config(1);
    let cmp = compare_selectors(&cfg, &[SelectorKind::Mda], &[3], 1).unwrap();
    let res = &cmp.results[0];
    let rep = &res.reports[0];
    let s = &res.summary;
    assert_eq!(s.get("Training time(s)").unwrap().value, rep.training_time_s);
    assert_eq!(s.get("Failed rounds").unwrap().value, rep.failed_rounds as f64);
    assert_eq!(s.get("Accuracy mean").unwrap().value, rep.final_accuracy);
    assert_eq!(s.get("Unique participants").unwrap().value, rep.unique_participants as f64);
    assert_eq!(s.get("Total participants").unwrap().value, rep.total_participants as f64);
    let labels: Vec<&str> = s.rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, METRIC_LABELS);
    assert_eq!(cmp.fastest, 0);
}

#[test]
fn worlds_depend_only_on_world_seeds() {
    let cfg = small_config(1);
    let a = compare_selectors(&cfg, &[SelectorKind::Random], &[1], 1).unwrap();
    let b = compare_selectors(&cfg, &[SelectorKind::TiflMda, SelectorKind::Fedcs], &[7, 8], 1).unwrap();
    assert_eq!(a.trace_digest, b.trace_digest);
    let other = compare_selectors(&small_config(2), &[SelectorKind::Random], &[1], 1).unwrap();
    assert_ne!(a.trace_digest, other.trace_digest);
}

#[test]
fn parallel_cells_match_sequential() {
    let cfg = small_config(4);
    let world = World::build(&cfg).unwrap();
    let seq = compare_on_world(&world, &cfg, &SelectorKind::ALL, &[1, 2], 1).unwrap();
    let par = compare_on_world(&world, &cfg, &SelectorKind::ALL, &[1, 2], 3).unwrap();
    assert_eq!(
        serde_json::to_string(&seq).unwrap(),
        serde_json::to_string(&par).unwrap()
    );
}

#[test]
fn run_experiment_twice_gives_identical_logs() {
    let mut cfg = small_config(3);
    cfg.selector.kind = SelectorKind::TiflMda;
    let a = run_experiment(&cfg, 11).unwrap();
    let b = run_experiment(&cfg, 11).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&cfg, 12).unwrap();
    assert_ne!(a.rounds, c.rounds);
}

#[test]
fn horizon_shorter_than_the_run_is_an_error() {
    let mut cfg = small_config(1);
    cfg.scenario.horizon_s = 2000.0;
    match run_experiment(&cfg, 1) {
        Err(EngineError::HorizonExceeded { horizon, .. }) => assert_eq!(horizon, 2000.0),
        other => panic!("expected horizon error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every round satisfies the round semantics when checked against the
    /// client traces directly.
    #[test]
    fn round_semantics_hold(
        scenario_seed in 0u64..1000,
        run_seed in 0u64..1000,
        kind_idx in 0usize..5,
        timeout in 300.0f64..2000.0,
    ) {
        let mut cfg = small_config(scenario_seed);
        cfg.round.timeout_s = timeout;
        cfg.round.strict_availability_failures = false;
        let kind = SelectorKind::ALL[kind_idx];
        let world = World::build(&cfg).unwrap();
        let rep = world
            .run(kind, &cfg.selector.params(), &cfg.round, local_training(&cfg), run_seed)
            .unwrap();
        let times = &world.population.round_times;
        let mut clock = 0.0;
        for r in &rep.rounds {
            prop_assert_eq!(r.start_s, clock);
            prop_assert!(r.duration_s > 0.0 && r.duration_s <= timeout);
            prop_assert!(r.selected.len() <= cfg.round.clients_per_round);
            prop_assert!(r.selected.windows(2).all(|w| w[0] < w[1]));
            for &c in &r.selected {
                prop_assert!(world.traces[c].is_available(clock).unwrap());
                let end = clock + times[c].min(timeout);
                let fails = times[c] > timeout || world.traces[c].unavailable_within(clock, end).unwrap();
                prop_assert_eq!(fails, r.failed.contains(&c));
            }
            let expected = if r.skipped || !r.failed.is_empty() {
                timeout
            } else {
                r.selected.iter().map(|&c| times[c]).fold(0.0, f64::max)
            };
            prop_assert_eq!(r.duration_s, expected);
            clock += r.duration_s;
        }
        prop_assert!((rep.training_time_s - clock).abs() <= 1e-6 * clock.max(1.0));
        let failed: usize = rep.rounds.iter().map(|r| r.failed.len()).sum();
        prop_assert_eq!(rep.avg_failed_clients, failed as f64 / rep.rounds.len() as f64);
    }
}
