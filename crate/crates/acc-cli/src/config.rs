//! Run options assembled from defaults, an optional flat `key = value`
//! config file, and same-named CLI flags (flags win).

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use acc_core::evolution::{DatasetSelector, EvolutionConfig, StartsPolicy};

/// Data source for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    Mnist,
    Synthetic,
}

impl FromStr for DatasetKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnist" => Ok(Self::Mnist),
            "synthetic" => Ok(Self::Synthetic),
            other => Err(anyhow!(
                "unknown dataset {other:?} (expected mnist or synthetic)"
            )),
        }
    }
}

/// Which split an analysis command reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// The per-class training subset.
    Train,
    /// The held-out test set.
    Test,
}

impl FromStr for SplitKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "test" => Ok(Self::Test),
            other => Err(anyhow!("unknown split {other:?} (expected train or test)")),
        }
    }
}

/// CLI flags shared by every subcommand. Each flag mirrors a config-file key
/// of the same name.
#[derive(Debug, Default, clap::Args)]
pub struct Overrides {
    /// Flat `key = value` config file applied before other flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed for evolve; start-position seed for analysis commands
    #[arg(long)]
    pub seed: Option<u64>,
    /// Generations to evolve
    #[arg(long)]
    pub generations: Option<u64>,
    /// Data source: mnist or synthetic
    #[arg(long)]
    pub dataset: Option<String>,
    /// Directory holding the four MNIST IDX files (plain or gzipped)
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Images per class in the training subset
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Split for analysis commands: train or test
    #[arg(long)]
    pub split: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 = all cores; affects speed only, never results
    #[arg(long)]
    pub threads: Option<usize>,
    /// Population size (must be even)
    #[arg(long)]
    pub population: Option<usize>,
    /// Per-byte point mutation rate
    #[arg(long)]
    pub point_rate: Option<f64>,
    /// Per-offspring segment duplication rate
    #[arg(long)]
    pub dup_rate: Option<f64>,
    /// Per-offspring segment deletion rate
    #[arg(long)]
    pub del_rate: Option<f64>,
    /// Smallest genome mutation may produce
    #[arg(long)]
    pub min_genome: Option<usize>,
    /// Largest genome mutation may produce
    #[arg(long)]
    pub max_genome: Option<usize>,
    /// Length of fresh random genomes
    #[arg(long)]
    pub init_genome: Option<usize>,
    /// Start positions: per-generation or fixed
    #[arg(long)]
    pub starts_policy: Option<String>,
    /// Generations between checkpoints, 0 disables
    #[arg(long)]
    pub checkpoint_every: Option<u64>,
}

/// Fully resolved options for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub generations: u64,
    pub dataset: DatasetKind,
    pub mnist_dir: PathBuf,
    pub per_class: usize,
    pub split: SplitKind,
    pub out: PathBuf,
    pub threads: usize,
    pub population: usize,
    pub point_rate: f64,
    pub dup_rate: f64,
    pub del_rate: f64,
    pub min_genome: usize,
    pub max_genome: usize,
    pub init_genome: usize,
    pub starts_policy: StartsPolicy,
    pub checkpoint_every: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EvolutionConfig::default();
        Self {
            seed: e.master_seed,
            generations: e.max_generations,
            dataset: DatasetKind::Synthetic,
            mnist_dir: PathBuf::from("data/mnist"),
            per_class: acc_core::dataset::DEFAULT_PER_CLASS,
            split: SplitKind::Test,
            out: PathBuf::from("acc-out"),
            threads: 0,
            population: e.population_size,
            point_rate: e.point_rate,
            dup_rate: e.dup_rate,
            del_rate: e.del_rate,
            min_genome: e.min_genome,
            max_genome: e.max_genome,
            init_genome: e.init_genome_len,
            starts_policy: e.starts_policy,
            checkpoint_every: 1_000,
        }
    }
}

impl RunConfig {
    /// Defaults, then the config file (if any), then explicit flags.
    pub fn resolve(overrides: &Overrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = &overrides.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            for (lineno, key, value) in parse_config_lines(&text)? {
                cfg.apply(&key, &value)
                    .with_context(|| format!("{}:{lineno}", path.display()))?;
            }
        }
        cfg.apply_overrides(overrides)?;
        Ok(cfg)
    }

    fn apply_overrides(&mut self, o: &Overrides) -> Result<()> {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &o.$field {
                    self.$field = v.clone();
                }
            };
        }
        take!(seed);
        take!(generations);
        take!(mnist_dir);
        take!(per_class);
        take!(out);
        take!(threads);
        take!(population);
        take!(point_rate);
        take!(dup_rate);
        take!(del_rate);
        take!(min_genome);
        take!(max_genome);
        take!(init_genome);
        take!(checkpoint_every);
        if let Some(v) = &o.dataset {
            self.dataset = v.parse()?;
        }
        if let Some(v) = &o.split {
            self.split = v.parse()?;
        }
        if let Some(v) = &o.starts_policy {
            self.starts_policy = v.parse().map_err(|e: String| anyhow!(e))?;
        }
        Ok(())
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("bad value for {key}: {e}"))
        }
        match key {
            "seed" => self.seed = parse(key, value)?,
            "generations" => self.generations = parse(key, value)?,
            "dataset" => self.dataset = value.parse()?,
            "mnist-dir" => self.mnist_dir = PathBuf::from(value),
            "per-class" => self.per_class = parse(key, value)?,
            "split" => self.split = value.parse()?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = parse(key, value)?,
            "population" => self.population = parse(key, value)?,
            "point-rate" => self.point_rate = parse(key, value)?,
            "dup-rate" => self.dup_rate = parse(key, value)?,
            "del-rate" => self.del_rate = parse(key, value)?,
            "min-genome" => self.min_genome = parse(key, value)?,
            "max-genome" => self.max_genome = parse(key, value)?,
            "init-genome" => self.init_genome = parse(key, value)?,
            "starts-policy" => {
                self.starts_policy = value.parse().map_err(|e: String| anyhow!(e))?
            }
            "checkpoint-every" => self.checkpoint_every = parse(key, value)?,
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    /// The engine-side config for an `evolve` run writing into `self.out`.
    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            population_size: self.population,
            min_genome: self.min_genome,
            max_genome: self.max_genome,
            init_genome_len: self.init_genome,
            point_rate: self.point_rate,
            dup_rate: self.dup_rate,
            del_rate: self.del_rate,
            max_generations: self.generations,
            master_seed: self.seed,
            starts_policy: self.starts_policy,
            dataset: match self.dataset {
                DatasetKind::Synthetic => DatasetSelector::Synthetic,
                DatasetKind::Mnist => DatasetSelector::Mnist {
                    per_class: self.per_class,
                },
            },
            checkpoint_every: self.checkpoint_every,
            checkpoint_dir: (self.checkpoint_every > 0).then(|| self.out.clone()),
        }
    }
}

fn parse_config_lines(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {line:?}", i + 1))?;
        pairs.push((i + 1, key.trim().to_owned(), value.trim().to_owned()));
    }
    Ok(pairs)
}
