//! Post-hoc analysis of evolved brains: per-class accuracy tables,
//! visit-frequency heatmaps, and per-step episode traces.

use rayon::prelude::*;
use serde::Serialize;

use crate::brain::GateNetwork;
use crate::dataset::{BinaryImage, Dataset, IMAGE_SIDE};
use crate::pnm;
use crate::seeding::starting_positions;
use crate::sim::{
    fovea_coverage, run_episode, score_episode, EpisodeResult, Fitness, GuessSet, PixelSet,
    Position, TraceStep, MAX_STEPS,
};
use crate::Rational;

/// Strict per-class accuracy plus the partial-credit (fitness-style) score.
///
/// An image counts as correct only when the final guess set is exactly the
/// true label; the partial-credit column reports the mean `1/|guesses|`
/// score so multi-guess behavior stays visible next to the strict number.
#[derive(Debug, Clone, PartialEq)]
pub struct PerClassAccuracy {
    counts: [usize; 10],
    correct: [usize; 10],
    per_class: [Rational; 10],
    partial: [Rational; 10],
    overall: Rational,
    partial_overall: Rational,
}

impl PerClassAccuracy {
    /// Images of each class.
    pub fn counts(&self) -> &[usize; 10] {
        &self.counts
    }

    /// Strictly correct images of each class.
    pub fn correct(&self) -> &[usize; 10] {
        &self.correct
    }

    /// Strict accuracy per class (0 for absent classes).
    pub fn per_class(&self) -> &[Rational; 10] {
        &self.per_class
    }

    /// Mean partial-credit score per class.
    pub fn partial(&self) -> &[Rational; 10] {
        &self.partial
    }

    /// Macro average: the exact unweighted mean of the ten per-class values.
    pub fn overall(&self) -> Rational {
        self.overall
    }

    pub fn overall_f64(&self) -> f64 {
        ratio_f64(self.overall)
    }

    pub fn partial_overall(&self) -> Rational {
        self.partial_overall
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,images,correct,accuracy,partial_credit\n");
        for c in 0..10 {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c,
                self.counts[c],
                self.correct[c],
                ratio_f64(self.per_class[c]),
                ratio_f64(self.partial[c]),
            ));
        }
        out.push_str(&format!(
            "overall,{},{},{},{}\n",
            self.counts.iter().sum::<usize>(),
            self.correct.iter().sum::<usize>(),
            ratio_f64(self.overall),
            ratio_f64(self.partial_overall),
        ));
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("class  images  correct  accuracy  partial\n");
        for c in 0..10 {
            out.push_str(&format!(
                "{:<5}  {:>6}  {:>7}  {:>8.4}  {:>7.4}\n",
                c,
                self.counts[c],
                self.correct[c],
                ratio_f64(self.per_class[c]),
                ratio_f64(self.partial[c]),
            ));
        }
        out.push_str(&format!(
            "{:<5}  {:>6}  {:>7}  {:>8.4}  {:>7.4}\n",
            "all",
            self.counts.iter().sum::<usize>(),
            self.correct.iter().sum::<usize>(),
            ratio_f64(self.overall),
            ratio_f64(self.partial_overall),
        ));
        out
    }
}

fn ratio_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Tally accuracy from `(final_guesses, label)` pairs.
pub fn accuracy_from_results(
    results: impl IntoIterator<Item = (GuessSet, u8)>,
) -> PerClassAccuracy {
    let mut counts = [0usize; 10];
    let mut correct = [0usize; 10];
    // Partial credit accumulates in integer multiples of 1/2520.
    let mut partial_acc = [0u64; 10];
    for (guesses, label) in results {
        assert!(label < 10, "label out of range");
        let c = label as usize;
        counts[c] += 1;
        if guesses.contains(label) {
            if guesses.len() == 1 {
                correct[c] += 1;
            }
            partial_acc[c] += 2520 / guesses.len() as u64;
        }
    }
    let fraction = |num: u64, denom: u64| {
        if denom == 0 {
            Rational::new_raw(0, 1)
        } else {
            Rational::new(num, denom)
        }
    };
    let per_class: [Rational; 10] =
        std::array::from_fn(|c| fraction(correct[c] as u64, counts[c] as u64));
    let partial: [Rational; 10] =
        std::array::from_fn(|c| fraction(partial_acc[c], 2520 * counts[c] as u64));
    let mean10 = |values: &[Rational; 10]| {
        values.iter().fold(Rational::new_raw(0, 1), |a, b| a + b) / Rational::from_integer(10)
    };
    PerClassAccuracy {
        counts,
        correct,
        overall: mean10(&per_class),
        partial_overall: mean10(&partial),
        per_class,
        partial,
    }
}

fn run_split(
    net: &GateNetwork,
    data: &Dataset,
    starts: &[Position],
    trace: bool,
) -> Vec<EpisodeResult> {
    assert_eq!(starts.len(), data.len(), "one start per image");
    data.images()
        .par_iter()
        .zip(starts.par_iter())
        .map(|(img, &start)| run_episode(net, img, start, MAX_STEPS, trace))
        .collect()
}

/// Accuracy of a network over a split with explicitly supplied starts.
pub fn accuracy_with_starts(
    net: &GateNetwork,
    data: &Dataset,
    starts: &[Position],
) -> PerClassAccuracy {
    let results = run_split(net, data, starts, false);
    accuracy_from_results(
        results
            .iter()
            .zip(data.labels())
            .map(|(r, &label)| (r.final_guesses, label)),
    )
}

/// Accuracy of a network over a split, with starts drawn from `starts_seed`.
pub fn evaluate_accuracy(net: &GateNetwork, data: &Dataset, starts_seed: u64) -> PerClassAccuracy {
    accuracy_with_starts(net, data, &starting_positions(starts_seed, 0, data.len()))
}

/// Eq-style mean per-image score over a split (partial credit, micro mean).
pub fn split_fitness(net: &GateNetwork, data: &Dataset, starts_seed: u64) -> Fitness {
    let starts = starting_positions(starts_seed, 0, data.len());
    let results = run_split(net, data, &starts, false);
    let scores: Vec<Fitness> = results
        .iter()
        .zip(data.labels())
        .map(|(r, &label)| score_episode(r, label))
        .collect();
    Fitness::exact_mean(&scores)
}

/// How often the fovea covered each pixel, accumulated over every step of
/// every episode (no per-episode deduplication).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Heatmap {
    counts: Vec<u32>,
}

impl Default for Heatmap {
    fn default() -> Self {
        Self {
            counts: vec![0; IMAGE_SIDE * IMAGE_SIDE],
        }
    }
}

impl Heatmap {
    pub fn count(&self, x: usize, y: usize) -> u32 {
        self.counts[y * IMAGE_SIDE + x]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Add one step's fovea coverage.
    pub fn add_view(&mut self, pos: Position) {
        for (x, y) in fovea_coverage(pos) {
            self.counts[y * IMAGE_SIDE + x] += 1;
        }
    }

    /// 28 rows of 28 comma-separated counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.counts.chunks(IMAGE_SIDE) {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Grayscale render, darker where visits are denser.
    pub fn to_pgm(&self) -> String {
        let max = self.max();
        let pixels: Vec<u8> = self
            .counts
            .iter()
            .map(|&c| {
                if max == 0 {
                    255
                } else {
                    255 - (c as u64 * 255 / max as u64) as u8
                }
            })
            .collect();
        pnm::write_pgm(IMAGE_SIDE, IMAGE_SIDE, &pixels)
    }
}

/// Heatmap of a network over a split with explicitly supplied starts.
pub fn heatmap_with_starts(net: &GateNetwork, data: &Dataset, starts: &[Position]) -> Heatmap {
    let results = run_split(net, data, starts, true);
    let mut map = Heatmap::default();
    for result in &results {
        for pos in result.trajectory().expect("traced") {
            map.add_view(pos);
        }
    }
    map
}

/// Heatmap of a network over a split, with starts drawn from `starts_seed`.
pub fn visit_heatmap(net: &GateNetwork, data: &Dataset, starts_seed: u64) -> Heatmap {
    heatmap_with_starts(net, data, &starting_positions(starts_seed, 0, data.len()))
}

/// One JSON-lines trace record.
#[derive(Debug, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub x: u8,
    pub y: u8,
    pub fovea_bits: [u8; 9],
    pub ray_bits: [u8; 4],
    /// Post-veto guesses after this step.
    pub guesses: Vec<u8>,
    /// Raw veto states after this step.
    pub vetoes: Vec<u8>,
    pub done: bool,
}

impl TraceRecord {
    pub fn from_step(step: &TraceStep) -> Self {
        Self {
            t: step.t,
            x: step.pos.x,
            y: step.pos.y,
            fovea_bits: step.reading.fovea_bits(),
            ray_bits: step.reading.ray_bits(),
            guesses: step.guesses().classes(),
            vetoes: step.vetoes().classes(),
            done: step.done(),
        }
    }
}

/// Rendered trace artifacts: one JSON record per step plus a grayscale
/// overlay (digit pixels gray, fovea-visited pixels dark). Step order in the
/// JSON lines is the path order.
#[derive(Debug, Clone)]
pub struct TraceArtifacts {
    pub jsonl: String,
    pub overlay_pgm: String,
}

/// Run one traced episode and render its artifacts.
pub fn trace_episode(
    net: &GateNetwork,
    img: &BinaryImage,
    start: Position,
) -> (EpisodeResult, TraceArtifacts) {
    let result = run_episode(net, img, start, MAX_STEPS, true);
    let steps = result.trace.as_ref().expect("traced");
    let mut jsonl = String::new();
    for step in steps {
        let record = TraceRecord::from_step(step);
        jsonl.push_str(&serde_json::to_string(&record).expect("trace serializes"));
        jsonl.push('\n');
    }
    let overlay_pgm = render_trace_overlay(img, &result.visited);
    (result, TraceArtifacts { jsonl, overlay_pgm })
}

const OVERLAY_BACKGROUND: u8 = 255;
const OVERLAY_DIGIT: u8 = 160;
const OVERLAY_VISITED: u8 = 64;

/// Grayscale overlay of an episode: visited pixels dark over the digit.
pub fn render_trace_overlay(img: &BinaryImage, visited: &PixelSet) -> String {
    let mut pixels = Vec::with_capacity(IMAGE_SIDE * IMAGE_SIDE);
    for y in 0..IMAGE_SIDE {
        for x in 0..IMAGE_SIDE {
            pixels.push(if visited.contains(x, y) {
                OVERLAY_VISITED
            } else if img.bit(x, y) {
                OVERLAY_DIGIT
            } else {
                OVERLAY_BACKGROUND
            });
        }
    }
    pnm::write_pgm(IMAGE_SIDE, IMAGE_SIDE, &pixels)
}
