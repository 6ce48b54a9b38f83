//! # acc-core
//!
//! An engine for evolving, running, and analyzing *active categorical
//! classifiers* (ACCs): deterministic gate-network brains, decoded from byte
//! genomes, that saccade over binarized 28x28 digit images, integrate sensor
//! readings over time, and emit multi-class guesses.
//!
//! The crate is organized around five pieces:
//!
//! - [`dataset`] — IDX digit-file parsing, binarization, training subsets,
//!   and a built-in deterministic synthetic digit set.
//! - [`brain`] — byte genomes and their decoding into gate networks over a
//!   64-bit state vector.
//! - [`sim`] — the embodied episode: fovea and raycast sensing, saccadic
//!   motion, guess/veto/done decoding, and exact fitness scoring.
//! - [`evolution`] — the genetic algorithm: shuffled pairwise tournaments,
//!   point/duplication/deletion mutation, checkpointing, elite reseeding.
//! - [`analysis`] — per-class accuracy, visit-frequency heatmaps, and
//!   episode traces.
//!
//! Everything downstream of a `(master_seed, config, dataset)` triple is
//! deterministic: reruns produce bit-identical genomes, logs, and exports
//! regardless of worker-thread count.

pub mod analysis;
pub mod brain;
pub mod dataset;
pub mod evolution;
pub mod pnm;
pub mod seeding;
pub mod sim;

/// Exact fraction type used for fitness and accuracy arithmetic.
pub type Rational = num_rational::Ratio<u64>;

pub use brain::{
    brain_step, decode_genome, genome_digest, Gate, GateNetwork, Genome, GenomeDigest,
    GenomeMetadata, StateVector,
};
pub use dataset::{
    binarize, parse_idx_images, parse_idx_labels, select_training_subset, synthetic_digits,
    BinaryImage, Dataset, DatasetError, GrayImage,
};
pub use evolution::{
    initial_population, mutate, random_genome, run_evolution, seed_from_elite, tournament_round,
    Checkpoint, DatasetSelector, EvolutionConfig, EvolutionError, EvolutionLog, EvolutionOutcome,
    GenerationRecord, Population, StartsPolicy,
};
pub use sim::{
    decode_actuation, decode_classification, evaluate_fitness, raycast, run_episode, score_episode,
    sense, EpisodeResult, Fitness, GuessSet, Position, RayDirection, SensorReading,
};
