//! The genetic algorithm: shuffled pairwise tournaments over a population of
//! byte genomes, point/duplication/deletion mutation, per-generation start
//! resampling, checkpointing, and elite reseeding.
//!
//! Selection is deliberately simple: the population is shuffled, consecutive
//! pairs compete, and the fitter genome places one exact copy and one
//! mutated copy of itself into the next generation. There is no crossover.

use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brain::{
    decode_genome, Genome, GenomeDigest, GenomeError, GENE_FOOTPRINT, MAX_GENOME_LEN,
    MIN_GENOME_LEN,
};
use crate::dataset::Dataset;
use crate::seeding::{generation_rng, genome_rng, starting_positions};
use crate::sim::{evaluate_fitness, Fitness, Position};

/// Start codons written into every fresh random genome.
pub const SEED_CODONS: usize = 12;
/// Length of a fresh random genome.
pub const DEFAULT_INIT_GENOME_LEN: usize = 5_000;
/// Shortest segment a duplication or deletion may move.
pub const SEGMENT_MIN: usize = 16;
/// Longest segment a duplication or deletion may move.
pub const SEGMENT_MAX: usize = 512;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("population holds {found} genomes, config says {expected}")]
    PopulationSize { expected: usize, found: usize },
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {reason}")]
    BadCheckpoint { path: PathBuf, reason: String },
}

/// Whether episode start positions are redrawn each generation (shared by
/// every individual of that generation) or pinned for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartsPolicy {
    PerGeneration,
    Fixed,
}

impl std::str::FromStr for StartsPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-generation" => Ok(Self::PerGeneration),
            "fixed" => Ok(Self::Fixed),
            other => Err(format!(
                "unknown starts policy {other:?} (expected per-generation or fixed)"
            )),
        }
    }
}

impl std::fmt::Display for StartsPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerGeneration => "per-generation",
            Self::Fixed => "fixed",
        })
    }
}

/// Which data a run trains on. The engine itself never interprets this; it
/// is echoed into checkpoints so a resumed run can reload the same split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DatasetSelector {
    Synthetic,
    Mnist { per_class: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub min_genome: usize,
    pub max_genome: usize,
    pub init_genome_len: usize,
    /// Per-byte replacement probability.
    pub point_rate: f64,
    /// Per-offspring segment duplication probability.
    pub dup_rate: f64,
    /// Per-offspring segment deletion probability.
    pub del_rate: f64,
    pub max_generations: u64,
    pub master_seed: u64,
    pub starts_policy: StartsPolicy,
    pub dataset: DatasetSelector,
    /// Generations between checkpoints; 0 disables checkpointing.
    pub checkpoint_every: u64,
    #[serde(default)]
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            min_genome: MIN_GENOME_LEN,
            max_genome: MAX_GENOME_LEN,
            init_genome_len: DEFAULT_INIT_GENOME_LEN,
            point_rate: 0.0005,
            dup_rate: 0.05,
            del_rate: 0.02,
            max_generations: 1_000,
            master_seed: 42,
            starts_policy: StartsPolicy::PerGeneration,
            dataset: DatasetSelector::Synthetic,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |msg: String| Err(EvolutionError::InvalidConfig(msg));
        if self.population_size == 0 || self.population_size % 2 != 0 {
            return fail(format!(
                "population_size {} must be even and positive",
                self.population_size
            ));
        }
        if self.min_genome < MIN_GENOME_LEN
            || self.max_genome > MAX_GENOME_LEN
            || self.min_genome > self.max_genome
        {
            return fail(format!(
                "genome bounds [{}, {}] must sit inside [{MIN_GENOME_LEN}, {MAX_GENOME_LEN}]",
                self.min_genome, self.max_genome
            ));
        }
        if !(self.min_genome..=self.max_genome).contains(&self.init_genome_len) {
            return fail(format!(
                "init_genome_len {} outside [{}, {}]",
                self.init_genome_len, self.min_genome, self.max_genome
            ));
        }
        for (name, rate) in [
            ("point_rate", self.point_rate),
            ("dup_rate", self.dup_rate),
            ("del_rate", self.del_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return fail(format!("{name} {rate} outside [0, 1]"));
            }
        }
        if self.checkpoint_every > 0 && self.checkpoint_dir.is_none() {
            return fail("checkpoint_every set but no checkpoint_dir".into());
        }
        Ok(())
    }
}

/// The genomes alive at one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub genomes: Vec<Genome>,
    pub generation: u64,
}

/// Uniform random bytes with `SEED_CODONS` start codons written at distinct
/// random offsets, so fresh genomes decode to at least a few gates.
pub fn random_genome(rng: &mut impl Rng, length: usize) -> Genome {
    assert!((MIN_GENOME_LEN..=MAX_GENOME_LEN).contains(&length));
    let mut bytes = vec![0u8; length];
    rng.fill_bytes(&mut bytes);
    let span = length - GENE_FOOTPRINT + 1;
    for p in rand::seq::index::sample(rng, span, SEED_CODONS) {
        bytes[p] = crate::brain::START_CODON[0];
        bytes[p + 1] = crate::brain::START_CODON[1];
    }
    Genome::from_bytes(bytes).expect("length checked above")
}

/// Fresh random population for generation 0.
pub fn initial_population(cfg: &EvolutionConfig) -> Population {
    let genomes = (0..cfg.population_size)
        .map(|i| {
            let mut rng = genome_rng(cfg.master_seed, i as u64);
            random_genome(&mut rng, cfg.init_genome_len)
        })
        .collect();
    Population {
        genomes,
        generation: 0,
    }
}

/// One exact copy of the elite plus `population_size - 1` mutants of it.
pub fn seed_from_elite(elite: &Genome, rng: &mut impl Rng, cfg: &EvolutionConfig) -> Population {
    let mut genomes = Vec::with_capacity(cfg.population_size);
    genomes.push(elite.clone());
    while genomes.len() < cfg.population_size {
        genomes.push(mutate(elite, rng, cfg));
    }
    Population {
        genomes,
        generation: 0,
    }
}

/// What one `mutate` call actually applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MutationStats {
    pub point_mutations: u32,
    pub duplicated: bool,
    pub deleted: bool,
}

/// Mutate a genome: independent per-byte replacement, then maybe one segment
/// duplication, then maybe one segment deletion. An operation that would
/// push the length outside the configured bounds is skipped rather than
/// truncated.
pub fn mutate(genome: &Genome, rng: &mut impl Rng, cfg: &EvolutionConfig) -> Genome {
    mutate_with_stats(genome, rng, cfg).0
}

/// [`mutate`], also reporting which operators fired.
pub fn mutate_with_stats(
    genome: &Genome,
    rng: &mut impl Rng,
    cfg: &EvolutionConfig,
) -> (Genome, MutationStats) {
    let mut bytes = genome.bytes().to_vec();
    let mut stats = MutationStats::default();

    // Sampling a binomial count and then distinct positions is equivalent in
    // distribution to an independent Bernoulli draw per byte.
    let points = Binomial::new(bytes.len() as u64, cfg.point_rate)
        .expect("validated rate")
        .sample(rng) as usize;
    if points > 0 {
        for i in rand::seq::index::sample(rng, bytes.len(), points) {
            bytes[i] = rng.random();
        }
        stats.point_mutations = points as u32;
    }

    if rng.random_bool(cfg.dup_rate) {
        let seg = rng.random_range(SEGMENT_MIN..=SEGMENT_MAX).min(bytes.len());
        if bytes.len() + seg <= cfg.max_genome {
            let src = rng.random_range(0..=bytes.len() - seg);
            let insert_at = rng.random_range(0..=bytes.len());
            let segment = bytes[src..src + seg].to_vec();
            bytes.splice(insert_at..insert_at, segment);
            stats.duplicated = true;
        }
    }

    if rng.random_bool(cfg.del_rate) {
        let seg = rng.random_range(SEGMENT_MIN..=SEGMENT_MAX).min(bytes.len());
        if bytes.len() - seg >= cfg.min_genome {
            let start = rng.random_range(0..=bytes.len() - seg);
            bytes.drain(start..start + seg);
            stats.deleted = true;
        }
    }

    (
        Genome::from_bytes(bytes).expect("mutation preserves length bounds"),
        stats,
    )
}

/// Winner index for each consecutive pair of `order`: strictly higher exact
/// fitness wins, ties go to the earlier shuffled position.
fn pair_winners(order: &[usize], fitnesses: &[Fitness]) -> Vec<usize> {
    order
        .chunks_exact(2)
        .map(|pair| {
            if fitnesses[pair[1]] > fitnesses[pair[0]] {
                pair[1]
            } else {
                pair[0]
            }
        })
        .collect()
}

/// One shuffled pairwise tournament. Every winner contributes an exact copy
/// of itself and one mutated copy; losers contribute nothing. Population
/// size is preserved.
pub fn tournament_round(
    pop: &Population,
    fitnesses: &[Fitness],
    rng: &mut impl Rng,
    cfg: &EvolutionConfig,
) -> Population {
    assert_eq!(pop.genomes.len(), fitnesses.len(), "fitness per genome");
    assert!(
        pop.genomes.len() % 2 == 0,
        "pairwise tournament needs an even population"
    );
    let mut order: Vec<usize> = (0..pop.genomes.len()).collect();
    order.shuffle(rng);
    let mut genomes = Vec::with_capacity(pop.genomes.len());
    for winner in pair_winners(&order, fitnesses) {
        let parent = &pop.genomes[winner];
        genomes.push(parent.clone());
        genomes.push(mutate(parent, rng, cfg));
    }
    Population {
        genomes,
        generation: pop.generation + 1,
    }
}

/// Decode and score every genome against the same starts. Parallel across
/// genomes; per-image accumulation stays in image order, so results are
/// independent of the worker count.
pub fn evaluate_population(
    genomes: &[Genome],
    data: &Dataset,
    starts: &[Position],
) -> Vec<Fitness> {
    genomes
        .par_iter()
        .map(|g| evaluate_fitness(&decode_genome(g), data, starts).fitness)
        .collect()
}

/// One fitness-log row.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: u64,
    pub best_fitness: Fitness,
    pub mean_fitness: Fitness,
    pub best_digest: GenomeDigest,
}

impl GenerationRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.generation, self.best_fitness, self.mean_fitness, self.best_digest
        )
    }
}

/// Per-generation best/mean fitness history.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionLog {
    pub records: Vec<GenerationRecord>,
}

impl EvolutionLog {
    pub const CSV_HEADER: &'static str = "generation,best_fitness,mean_fitness,best_digest";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for record in &self.records {
            out.push_str(&record.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), EvolutionError> {
        std::fs::write(path, self.to_csv()).map_err(|source| EvolutionError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Resumable snapshot of a run: the config echo plus the population entering
/// `generation`.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: EvolutionConfig,
    pub generation: u64,
    /// Base64-encoded genome bytes, population order preserved.
    pub genomes: Vec<String>,
}

impl Checkpoint {
    pub fn capture(config: &EvolutionConfig, pop: &Population) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: config.clone(),
            generation: pop.generation,
            genomes: pop
                .genomes
                .iter()
                .map(|g| BASE64.encode(g.bytes()))
                .collect(),
        }
    }

    pub fn population(&self) -> Result<Population, EvolutionError> {
        let genomes = self
            .genomes
            .iter()
            .map(|text| {
                let bytes = BASE64
                    .decode(text)
                    .map_err(|e| EvolutionError::BadCheckpoint {
                        path: PathBuf::new(),
                        reason: format!("genome is not base64: {e}"),
                    })?;
                Ok(Genome::from_bytes(bytes)?)
            })
            .collect::<Result<Vec<_>, EvolutionError>>()?;
        Ok(Population {
            genomes,
            generation: self.generation,
        })
    }

    /// Write atomically (temp file + rename) so an interrupted save never
    /// clobbers an older good checkpoint.
    pub fn save(&self, path: &Path) -> Result<(), EvolutionError> {
        let io_err = |source| EvolutionError::Io {
            path: path.to_path_buf(),
            source,
        };
        let json = serde_json::to_string(self).expect("checkpoint serializes");
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, json).map_err(io_err)?;
        std::fs::rename(&tmp, path).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, EvolutionError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvolutionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let checkpoint: Checkpoint =
            serde_json::from_str(&text).map_err(|e| EvolutionError::BadCheckpoint {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })?;
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(EvolutionError::BadCheckpoint {
                path: path.to_path_buf(),
                reason: format!(
                    "version {} (this build reads {CHECKPOINT_VERSION})",
                    checkpoint.version
                ),
            });
        }
        Ok(checkpoint)
    }
}

/// Result of a finished run.
#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    pub log: EvolutionLog,
    pub best_genome: Genome,
    pub best_fitness: Fitness,
    pub best_generation: u64,
}

/// Run the generation loop from `initial.generation` through
/// `cfg.max_generations` inclusive: draw starts, evaluate, log, then breed.
/// The final generation is evaluated and logged but not bred, so a run over
/// G generations emits G+1 records; `max_generations = 0` just scores the
/// initial population.
pub fn run_evolution(
    cfg: &EvolutionConfig,
    data: &Dataset,
    initial: Population,
    mut on_generation: impl FnMut(&GenerationRecord),
) -> Result<EvolutionOutcome, EvolutionError> {
    cfg.validate()?;
    if initial.genomes.len() != cfg.population_size {
        return Err(EvolutionError::PopulationSize {
            expected: cfg.population_size,
            found: initial.genomes.len(),
        });
    }
    let mut pop = initial;
    let mut log = EvolutionLog::default();
    let mut best: Option<(Genome, Fitness, u64)> = None;
    loop {
        let generation = pop.generation;
        if cfg.checkpoint_every > 0 && generation > 0 && generation % cfg.checkpoint_every == 0 {
            let dir = cfg.checkpoint_dir.as_ref().expect("validated");
            let path = dir.join(format!("checkpoint-{generation}.json"));
            Checkpoint::capture(cfg, &pop).save(&path)?;
        }

        let starts_index = match cfg.starts_policy {
            StartsPolicy::PerGeneration => generation,
            StartsPolicy::Fixed => 0,
        };
        let starts = starting_positions(cfg.master_seed, starts_index, data.len());
        let fitnesses = evaluate_population(&pop.genomes, data, &starts);

        let mut best_index = 0;
        for i in 1..fitnesses.len() {
            if fitnesses[i] > fitnesses[best_index] {
                best_index = i;
            }
        }
        let record = GenerationRecord {
            generation,
            best_fitness: fitnesses[best_index],
            mean_fitness: Fitness::exact_mean(&fitnesses),
            best_digest: pop.genomes[best_index].digest(),
        };
        on_generation(&record);
        log.records.push(record);

        if best
            .as_ref()
            .map_or(true, |(_, f, _)| fitnesses[best_index] > *f)
        {
            best = Some((
                pop.genomes[best_index].clone(),
                fitnesses[best_index],
                generation,
            ));
        }

        if generation >= cfg.max_generations {
            break;
        }
        let mut rng = generation_rng(cfg.master_seed, generation);
        pop = tournament_round(&pop, &fitnesses, &mut rng, cfg);
    }
    let (best_genome, best_fitness, best_generation) = best.expect("at least one generation ran");
    Ok(EvolutionOutcome {
        log,
        best_genome,
        best_fitness,
        best_generation,
    })
}
