//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Subcommand;

use acc_core::analysis::{evaluate_accuracy, split_fitness, trace_episode, visit_heatmap};
use acc_core::brain::{decode_genome, GateNetwork, Genome, GenomeMetadata};
use acc_core::dataset::{
    load_mnist_test, load_mnist_training_subset, synthetic_digit_pbm, synthetic_digits, Dataset,
    DEFAULT_THRESHOLD,
};
use acc_core::evolution::{
    initial_population, run_evolution, seed_from_elite, Checkpoint, DatasetSelector,
    EvolutionConfig, Population,
};
use acc_core::seeding::{reseed_rng, starting_positions};

use crate::config::{DatasetKind, Overrides, RunConfig, SplitKind};

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the genetic algorithm and write logs, checkpoints, and the best genome
    Evolve(EvolveArgs),
    /// Score a saved genome on a split and write the per-class accuracy table
    Evaluate(AnalyzeArgs),
    /// Accumulate the visit-frequency heatmap of a saved genome over a split
    Heatmap(AnalyzeArgs),
    /// Trace one episode of a saved genome on a single image
    Trace(TraceArgs),
    /// Write the built-in synthetic digit bitmaps
    Synth(SynthArgs),
}

#[derive(Debug, clap::Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Resume from a checkpoint written by an earlier run
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Seed the initial population with mutants of this elite genome
    #[arg(long)]
    elite: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Saved genome to analyze
    #[arg(long)]
    genome: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct TraceArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Saved genome to analyze
    #[arg(long)]
    genome: PathBuf,
    /// Index of the image within the chosen split
    #[arg(long)]
    image: usize,
}

#[derive(Debug, clap::Args)]
pub struct SynthArgs {
    #[command(flatten)]
    overrides: Overrides,
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Evolve(args) => evolve(args),
        Command::Evaluate(args) => evaluate(args),
        Command::Heatmap(args) => heatmap(args),
        Command::Trace(args) => trace(args),
        Command::Synth(args) => synth(args),
    }
}

/// Run `f` on a dedicated pool of `threads` workers (0 = rayon's default).
/// Thread count affects wall time only; results are scheduling-independent.
fn install_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")?;
    Ok(pool.install(f))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_network(path: &Path) -> Result<GateNetwork> {
    let genome =
        Genome::load(path).with_context(|| format!("loading genome {}", path.display()))?;
    Ok(decode_genome(&genome))
}

/// Data for an evolve run, chosen by the (possibly checkpoint-echoed)
/// selector; MNIST paths come from the current invocation.
fn load_training_data(selector: &DatasetSelector, cfg: &RunConfig) -> Result<Dataset> {
    match selector {
        DatasetSelector::Synthetic => Ok(synthetic_digits()),
        DatasetSelector::Mnist { per_class } => {
            load_mnist_training_subset(&cfg.mnist_dir, *per_class, DEFAULT_THRESHOLD)
                .with_context(|| format!("loading MNIST from {}", cfg.mnist_dir.display()))
        }
    }
}

/// Data for an analysis command: the configured dataset and split.
fn load_analysis_data(cfg: &RunConfig) -> Result<Dataset> {
    match (cfg.dataset, cfg.split) {
        (DatasetKind::Synthetic, _) => Ok(synthetic_digits()),
        (DatasetKind::Mnist, SplitKind::Train) => {
            load_mnist_training_subset(&cfg.mnist_dir, cfg.per_class, DEFAULT_THRESHOLD)
                .with_context(|| format!("loading MNIST from {}", cfg.mnist_dir.display()))
        }
        (DatasetKind::Mnist, SplitKind::Test) => load_mnist_test(&cfg.mnist_dir, DEFAULT_THRESHOLD)
            .with_context(|| format!("loading MNIST from {}", cfg.mnist_dir.display())),
    }
}

fn evolve(args: EvolveArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.overrides)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;

    let (ecfg, initial) = match (&args.resume, &args.elite) {
        (Some(_), Some(_)) => bail!("--resume and --elite are mutually exclusive"),
        (Some(path), None) => resume_setup(path, &args.overrides, &cfg)?,
        (None, Some(elite_path)) => {
            let ecfg = cfg.evolution_config();
            let elite = Genome::load(elite_path)
                .with_context(|| format!("loading elite {}", elite_path.display()))?;
            let mut rng = reseed_rng(ecfg.master_seed);
            let population = seed_from_elite(&elite, &mut rng, &ecfg);
            (ecfg, population)
        }
        (None, None) => {
            let ecfg = cfg.evolution_config();
            let population = initial_population(&ecfg);
            (ecfg, population)
        }
    };

    let data = load_training_data(&ecfg.dataset, &cfg)?;
    let start_gen = initial.generation;
    eprintln!(
        "evolving {} genomes on {} ({} images), generations {}..={}, seed {}",
        ecfg.population_size,
        data.split_name(),
        data.len(),
        start_gen,
        ecfg.max_generations,
        ecfg.master_seed
    );

    let outcome = install_pool(cfg.threads, || {
        run_evolution(&ecfg, &data, initial, |record| {
            if record.generation % 500 == 0 || record.generation == ecfg.max_generations {
                eprintln!(
                    "gen {:>6}  best {:.4}  mean {:.4}",
                    record.generation,
                    record.best_fitness.to_f64(),
                    record.mean_fitness.to_f64()
                );
            }
        })
    })??;

    let log_path = cfg.out.join("fitness_log.csv");
    outcome
        .log
        .write_csv(&log_path)
        .with_context(|| format!("writing {}", log_path.display()))?;

    let genome_path = cfg.out.join("best.genome");
    let meta = GenomeMetadata {
        length: outcome.best_genome.len(),
        digest: outcome.best_genome.digest().to_hex(),
        generation: outcome.best_generation,
        fitness: outcome.best_fitness.to_f64(),
        seed: ecfg.master_seed,
    };
    outcome
        .best_genome
        .save(&genome_path, &meta)
        .context("saving best genome")?;

    println!(
        "best fitness {:.4} at generation {} ({} gates)",
        outcome.best_fitness.to_f64(),
        outcome.best_generation,
        decode_genome(&outcome.best_genome).gates().len()
    );
    println!("wrote {}", log_path.display());
    println!("wrote {}", genome_path.display());
    Ok(())
}

/// Rebuild run state from a checkpoint. Only run-length, checkpointing, and
/// execution flags may be overridden; structural parameters stay as echoed
/// so the resumed run replays the original stream.
fn resume_setup(
    path: &Path,
    overrides: &Overrides,
    cfg: &RunConfig,
) -> Result<(EvolutionConfig, Population)> {
    let structural = [
        ("--seed", overrides.seed.is_some()),
        ("--population", overrides.population.is_some()),
        ("--point-rate", overrides.point_rate.is_some()),
        ("--dup-rate", overrides.dup_rate.is_some()),
        ("--del-rate", overrides.del_rate.is_some()),
        ("--min-genome", overrides.min_genome.is_some()),
        ("--max-genome", overrides.max_genome.is_some()),
        ("--init-genome", overrides.init_genome.is_some()),
        ("--starts-policy", overrides.starts_policy.is_some()),
        ("--dataset", overrides.dataset.is_some()),
        ("--per-class", overrides.per_class.is_some()),
    ];
    if let Some((flag, _)) = structural.iter().find(|(_, set)| *set) {
        bail!("{flag} cannot be changed when resuming from a checkpoint");
    }
    let checkpoint =
        Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    let mut ecfg = checkpoint.config.clone();
    if let Some(generations) = overrides.generations {
        ecfg.max_generations = generations;
    }
    if let Some(every) = overrides.checkpoint_every {
        ecfg.checkpoint_every = every;
    }
    ecfg.checkpoint_dir = (ecfg.checkpoint_every > 0).then(|| cfg.out.clone());
    let population = checkpoint.population()?;
    if population.generation > ecfg.max_generations {
        bail!(
            "checkpoint is at generation {} but the run ends at {}",
            population.generation,
            ecfg.max_generations
        );
    }
    Ok((ecfg, population))
}

fn evaluate(args: AnalyzeArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.overrides)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let net = load_network(&args.genome)?;
    let data = load_analysis_data(&cfg)?;
    let (accuracy, fitness) = install_pool(cfg.threads, || {
        (
            evaluate_accuracy(&net, &data, cfg.seed),
            split_fitness(&net, &data, cfg.seed),
        )
    })?;
    let csv_path = cfg.out.join("accuracy.csv");
    write_file(&csv_path, &accuracy.to_csv())?;
    print!("{}", accuracy.to_table());
    println!(
        "split {}  images {}  macro accuracy {:.4}  fitness {:.4}",
        data.split_name(),
        data.len(),
        accuracy.overall_f64(),
        fitness.to_f64()
    );
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn heatmap(args: AnalyzeArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.overrides)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let net = load_network(&args.genome)?;
    let data = load_analysis_data(&cfg)?;
    let map = install_pool(cfg.threads, || visit_heatmap(&net, &data, cfg.seed))?;
    let csv_path = cfg.out.join("heatmap.csv");
    let pgm_path = cfg.out.join("heatmap.pgm");
    write_file(&csv_path, &map.to_csv())?;
    write_file(&pgm_path, &map.to_pgm())?;
    println!(
        "heatmap over {} ({} images): {} views, peak {}",
        data.split_name(),
        data.len(),
        map.total(),
        map.max()
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", pgm_path.display());
    Ok(())
}

fn trace(args: TraceArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.overrides)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    let net = load_network(&args.genome)?;
    let data = load_analysis_data(&cfg)?;
    if args.image >= data.len() {
        bail!(
            "image index {} out of range: {} has {} images",
            args.image,
            data.split_name(),
            data.len()
        );
    }
    let start = starting_positions(cfg.seed, 0, args.image + 1)[args.image];
    let img = &data.images()[args.image];
    let label = data.labels()[args.image];
    let (result, artifacts) = trace_episode(&net, img, start);
    let jsonl_path = cfg.out.join("trace.jsonl");
    let pgm_path = cfg.out.join("trace.pgm");
    write_file(&jsonl_path, &artifacts.jsonl)?;
    write_file(&pgm_path, &artifacts.overlay_pgm)?;
    println!(
        "image {} (label {label}), start ({}, {}): {} steps, done={}, guesses {:?}",
        args.image,
        start.x,
        start.y,
        result.steps_used,
        result.done_fired,
        result.final_guesses.classes()
    );
    println!("wrote {}", jsonl_path.display());
    println!("wrote {}", pgm_path.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = RunConfig::resolve(&args.overrides)?;
    std::fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))?;
    for class in 0..10u8 {
        let path = cfg.out.join(format!("digit_{class}.pbm"));
        write_file(&path, synthetic_digit_pbm(class))?;
    }
    println!("wrote 10 digit bitmaps to {}", cfg.out.display());
    Ok(())
}
