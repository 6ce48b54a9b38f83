//! Evolve classifiers on the built-in synthetic digits and print progress.
//!
//! ```sh
//! cargo run --release -p acc-core --example synthetic_run -- [seed] [generations]
//! ```

use acc_core::dataset::synthetic_digits;
use acc_core::evolution::{initial_population, run_evolution, EvolutionConfig, StartsPolicy};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(19);
    let generations = args.next().and_then(|s| s.parse().ok()).unwrap_or(2_000);

    let cfg = EvolutionConfig {
        master_seed: seed,
        max_generations: generations,
        starts_policy: StartsPolicy::Fixed,
        init_genome_len: 500,
        ..EvolutionConfig::default()
    };
    let data = synthetic_digits();
    let outcome = run_evolution(&cfg, &data, initial_population(&cfg), |record| {
        if record.generation % 200 == 0 {
            println!(
                "gen {:>5}  best {:.4}  mean {:.4}",
                record.generation,
                record.best_fitness.to_f64(),
                record.mean_fitness.to_f64()
            );
        }
    })
    .expect("run");

    let net = acc_core::decode_genome(&outcome.best_genome);
    println!(
        "best fitness {:.4} at generation {} ({} gates, {} bytes)",
        outcome.best_fitness.to_f64(),
        outcome.best_generation,
        net.gates().len(),
        outcome.best_genome.len()
    );
}
