//! Run-level reproducibility: identical seeds give identical histories at
//! any worker count, and checkpoint-resume replays the uninterrupted run.

use acc_core::dataset::synthetic_digits;
use acc_core::evolution::{
    initial_population, run_evolution, Checkpoint, EvolutionConfig, StartsPolicy,
};

fn small_cfg(seed: u64) -> EvolutionConfig {
    EvolutionConfig {
        population_size: 20,
        max_generations: 12,
        master_seed: seed,
        ..EvolutionConfig::default()
    }
}

fn run_with_threads(cfg: &EvolutionConfig, threads: usize) -> String {
    let data = synthetic_digits();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    pool.install(|| {
        run_evolution(cfg, &data, initial_population(cfg), |_| {})
            .unwrap()
            .log
            .to_csv()
    })
}

#[test]
fn logs_are_identical_across_worker_counts() {
    let cfg = small_cfg(99);
    let serial = run_with_threads(&cfg, 1);
    let parallel = run_with_threads(&cfg, 4);
    assert_eq!(serial, parallel);
    assert_eq!(serial.lines().count(), 14); // header + generations 0..=12
}

#[test]
fn generation_best_is_at_least_the_mean() {
    let cfg = small_cfg(3);
    let data = synthetic_digits();
    let outcome = run_evolution(&cfg, &data, initial_population(&cfg), |_| {}).unwrap();
    for record in &outcome.log.records {
        assert!(record.best_fitness >= record.mean_fitness, "{record:?}");
    }
}

#[test]
fn different_seeds_diverge() {
    assert_ne!(
        run_with_threads(&small_cfg(1), 2),
        run_with_threads(&small_cfg(2), 2)
    );
}

#[test]
fn resumed_run_replays_the_uninterrupted_tail() {
    let data = synthetic_digits();
    let dir = tempfile::tempdir().unwrap();

    let plain = small_cfg(7);
    let uninterrupted = run_evolution(&plain, &data, initial_population(&plain), |_| {}).unwrap();

    let mut checkpointed = small_cfg(7);
    checkpointed.checkpoint_every = 5;
    checkpointed.checkpoint_dir = Some(dir.path().to_path_buf());
    let with_checkpoints = run_evolution(
        &checkpointed,
        &data,
        initial_population(&checkpointed),
        |_| {},
    )
    .unwrap();
    // Checkpoint writes never consume randomness.
    assert_eq!(uninterrupted.log, with_checkpoints.log);

    let checkpoint = Checkpoint::load(&dir.path().join("checkpoint-10.json")).unwrap();
    assert_eq!(checkpoint.generation, 10);
    let mut resumed_cfg = checkpoint.config.clone();
    resumed_cfg.checkpoint_every = 0;
    resumed_cfg.checkpoint_dir = None;
    let resumed = run_evolution(
        &resumed_cfg,
        &data,
        checkpoint.population().unwrap(),
        |_| {},
    )
    .unwrap();

    assert_eq!(resumed.log.records.len(), 3); // generations 10, 11, 12
    assert_eq!(
        resumed.log.records.as_slice(),
        &uninterrupted.log.records[10..]
    );
}

#[test]
fn fixed_starts_make_best_fitness_monotone() {
    let data = synthetic_digits();
    let cfg = EvolutionConfig {
        population_size: 20,
        max_generations: 40,
        master_seed: 5,
        starts_policy: StartsPolicy::Fixed,
        ..EvolutionConfig::default()
    };
    let outcome = run_evolution(&cfg, &data, initial_population(&cfg), |_| {}).unwrap();
    let best: Vec<f64> = outcome
        .log
        .records
        .iter()
        .map(|r| r.best_fitness.to_f64())
        .collect();
    for pair in best.windows(2) {
        assert!(
            pair[1] >= pair[0],
            "best fitness decreased under fixed starts: {pair:?}"
        );
    }
}
