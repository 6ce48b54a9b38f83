//! Byte genomes and the deterministic gate networks decoded from them.
//!
//! A genome is scanned left to right for the start codon (the byte pair
//! 42, 213). Each occurrence at position `p` opens a fixed 28-byte gene:
//!
//! ```text
//! p+0..p+2   start codon
//! p+2        n_in  = 1 + (byte mod 4)
//! p+3        n_out = 1 + (byte mod 4)
//! p+4..p+8   input state ids  (each mod 64; first n_in used)
//! p+8..p+12  output state ids (each mod 64; first n_out used)
//! p+12..p+28 16 table bytes; the first 2^n_in are used, each mod 2^n_out
//! ```
//!
//! Genes whose footprint would run past the genome end are discarded, and
//! scanning resumes at `p + 1`, so genes may overlap. Table entries are
//! indexed with input bit 0 (the first input id) as the least significant
//! index bit, and bit `k` of an entry drives the gate's k-th output id.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Shortest genome the engine accepts.
pub const MIN_GENOME_LEN: usize = 500;
/// Longest genome the engine accepts.
pub const MAX_GENOME_LEN: usize = 10_000;

/// The two-byte marker that opens a gene.
pub const START_CODON: [u8; 2] = [42, 213];
/// Bytes consumed by one gene, start codon included.
pub const GENE_FOOTPRINT: usize = 28;

/// Number of binary states in a brain.
pub const STATE_COUNT: usize = 64;

/// Fixed semantic layout of the 64 states.
pub mod layout {
    use std::ops::Range;

    /// 3x3 fovea, row-major.
    pub const VISION: Range<usize> = 0..9;
    /// Raycast sensors, in order 0, 90, 180, 270 degrees.
    pub const RAYS: Range<usize> = 9..13;
    /// Vertical motor: 1 moves down (+3), 0 moves up (-3).
    pub const MOTOR_VERTICAL: usize = 13;
    /// Horizontal motor: 1 moves right (+3), 0 moves left (-3).
    pub const MOTOR_HORIZONTAL: usize = 14;
    /// One guess state per digit class.
    pub const GUESS: Range<usize> = 15..25;
    /// One veto state per digit class; suppresses the matching guess.
    pub const VETO: Range<usize> = 25..35;
    /// Ends the episode early when set.
    pub const DONE: usize = 35;
    /// Free internal states.
    pub const MEMORY: Range<usize> = 36..64;
}

#[derive(Debug, Error)]
pub enum GenomeError {
    #[error("genome length {0} outside [{MIN_GENOME_LEN}, {MAX_GENOME_LEN}]")]
    Length(usize),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Metadata {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// A variable-length byte string, the unit of evolution.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genome(Vec<u8>);

impl Genome {
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self, GenomeError> {
        if !(MIN_GENOME_LEN..=MAX_GENOME_LEN).contains(&bytes.len()) {
            return Err(GenomeError::Length(bytes.len()));
        }
        Ok(Self(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digest(&self) -> GenomeDigest {
        genome_digest(self)
    }

    /// Write the raw bytes to `path` and a JSON metadata record alongside it
    /// at `path.json`.
    pub fn save(&self, path: &Path, meta: &GenomeMetadata) -> Result<(), GenomeError> {
        let io_err = |source| GenomeError::Io {
            path: path.to_path_buf(),
            source,
        };
        std::fs::write(path, &self.0).map_err(io_err)?;
        let meta_path = sidecar_path(path);
        let json = serde_json::to_string_pretty(meta).expect("metadata serializes");
        std::fs::write(&meta_path, json).map_err(|source| GenomeError::Io {
            path: meta_path,
            source,
        })
    }

    /// Read raw genome bytes from `path`.
    pub fn load(path: &Path) -> Result<Self, GenomeError> {
        let bytes = std::fs::read(path).map_err(|source| GenomeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(bytes)
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({} bytes, {})", self.0.len(), self.digest())
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

/// Sidecar record stored next to a `.genome` file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenomeMetadata {
    pub length: usize,
    pub digest: String,
    pub generation: u64,
    pub fitness: f64,
    pub seed: u64,
}

impl GenomeMetadata {
    pub fn load(genome_path: &Path) -> Result<Self, GenomeError> {
        let path = sidecar_path(genome_path);
        let text = std::fs::read_to_string(&path).map_err(|source| GenomeError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| GenomeError::Metadata { path, source })
    }
}

/// SHA-256 content digest used for provenance in logs and checkpoints.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct GenomeDigest([u8; 32]);

impl GenomeDigest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GenomeDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for GenomeDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Stable content hash of a genome's bytes.
pub fn genome_digest(genome: &Genome) -> GenomeDigest {
    GenomeDigest(Sha256::digest(genome.bytes()).into())
}

/// One deterministic logic gate: up to four input states indexing a lookup
/// table whose entries are OR-written onto up to four output states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    input_ids: Vec<u8>,
    output_ids: Vec<u8>,
    table: Vec<u8>,
}

impl Gate {
    pub fn new(input_ids: Vec<u8>, output_ids: Vec<u8>, table: Vec<u8>) -> Self {
        assert!((1..=4).contains(&input_ids.len()), "1-4 inputs");
        assert!((1..=4).contains(&output_ids.len()), "1-4 outputs");
        assert!(input_ids.iter().all(|&i| (i as usize) < STATE_COUNT));
        assert!(output_ids.iter().all(|&o| (o as usize) < STATE_COUNT));
        assert_eq!(table.len(), 1 << input_ids.len(), "2^n_in table entries");
        let max_entry = (1u16 << output_ids.len()) as u8;
        assert!(table.iter().all(|&e| e < max_entry), "entry < 2^n_out");
        Self {
            input_ids,
            output_ids,
            table,
        }
    }

    pub fn n_in(&self) -> usize {
        self.input_ids.len()
    }

    pub fn n_out(&self) -> usize {
        self.output_ids.len()
    }

    pub fn input_ids(&self) -> &[u8] {
        &self.input_ids
    }

    pub fn output_ids(&self) -> &[u8] {
        &self.output_ids
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }
}

/// A gate's table entries flattened to 64-bit OR masks for fast stepping.
#[derive(Clone)]
struct CompiledGate {
    n_in: u8,
    input_ids: [u8; 4],
    masks: [u64; 16],
}

impl CompiledGate {
    fn new(gate: &Gate) -> Self {
        let mut input_ids = [0u8; 4];
        input_ids[..gate.n_in()].copy_from_slice(&gate.input_ids);
        let mut masks = [0u64; 16];
        for (entry_index, &entry) in gate.table.iter().enumerate() {
            let mut mask = 0u64;
            for (k, &out) in gate.output_ids.iter().enumerate() {
                if entry >> k & 1 == 1 {
                    mask |= 1u64 << out;
                }
            }
            masks[entry_index] = mask;
        }
        Self {
            n_in: gate.n_in() as u8,
            input_ids,
            masks,
        }
    }
}

/// A decoded brain: an ordered list of gates plus the digest of the genome
/// it came from. Immutable once built; safe to share across threads.
#[derive(Clone)]
pub struct GateNetwork {
    gates: Vec<Gate>,
    genome_hash: GenomeDigest,
    compiled: Vec<CompiledGate>,
}

impl GateNetwork {
    /// Build directly from gates (tests and hand-crafted brains). The
    /// provenance digest is taken over the gates' own encoding.
    pub fn from_gates(gates: Vec<Gate>) -> Self {
        let mut hasher = Sha256::new();
        for gate in &gates {
            hasher.update([gate.n_in() as u8, gate.n_out() as u8]);
            hasher.update(&gate.input_ids);
            hasher.update(&gate.output_ids);
            hasher.update(&gate.table);
        }
        Self::with_hash(gates, GenomeDigest(hasher.finalize().into()))
    }

    fn with_hash(gates: Vec<Gate>, genome_hash: GenomeDigest) -> Self {
        let compiled = gates.iter().map(CompiledGate::new).collect();
        Self {
            gates,
            genome_hash,
            compiled,
        }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn genome_hash(&self) -> GenomeDigest {
        self.genome_hash
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }
}

impl PartialEq for GateNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.gates == other.gates && self.genome_hash == other.genome_hash
    }
}

impl Eq for GateNetwork {}

impl fmt::Debug for GateNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GateNetwork({} gates, {})",
            self.gates.len(),
            self.genome_hash
        )
    }
}

/// Scan a genome and decode every complete gene into a gate, in scan order.
/// A genome without start codons decodes to an empty (inert) network.
pub fn decode_genome(genome: &Genome) -> GateNetwork {
    let bytes = genome.bytes();
    let mut gates = Vec::new();
    for p in 0..bytes.len().saturating_sub(1) {
        if bytes[p] == START_CODON[0] && bytes[p + 1] == START_CODON[1] {
            if let Some(gene) = bytes.get(p..p + GENE_FOOTPRINT) {
                gates.push(decode_gene(gene));
            }
        }
    }
    GateNetwork::with_hash(gates, genome_digest(genome))
}

fn decode_gene(gene: &[u8]) -> Gate {
    let n_in = 1 + (gene[2] % 4) as usize;
    let n_out = 1 + (gene[3] % 4) as usize;
    let input_ids = gene[4..4 + n_in].iter().map(|b| b % 64).collect();
    let output_ids = gene[8..8 + n_out].iter().map(|b| b % 64).collect();
    let table = gene[12..12 + (1 << n_in)]
        .iter()
        .map(|b| b % (1 << n_out))
        .collect();
    Gate::new(input_ids, output_ids, table)
}

/// The 64 binary brain states at one instant.
#[derive(Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct StateVector(u64);

impl StateVector {
    pub const ZERO: Self = Self(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn get(self, index: usize) -> bool {
        debug_assert!(index < STATE_COUNT);
        self.0 >> index & 1 == 1
    }

    pub fn set(&mut self, index: usize, value: bool) {
        debug_assert!(index < STATE_COUNT);
        if value {
            self.0 |= 1 << index;
        } else {
            self.0 &= !(1 << index);
        }
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateVector({:#018x})", self.0)
    }
}

/// Advance the state one tick. The output vector starts all-zero; every gate
/// reads its inputs from `state` (time t) and ORs its table entry's bits onto
/// its output states. All reads precede all writes, so gate order never
/// matters and writes commute.
pub fn brain_step(net: &GateNetwork, state: StateVector) -> StateVector {
    let s = state.bits();
    let mut out = 0u64;
    for gate in &net.compiled {
        let mut index = 0usize;
        for k in 0..gate.n_in as usize {
            index |= (((s >> gate.input_ids[k]) & 1) as usize) << k;
        }
        out |= gate.masks[index];
    }
    StateVector(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn zero_genome(len: usize) -> Genome {
        Genome::from_bytes(vec![0; len]).unwrap()
    }

    /// The worked single-gate example: reads state 5, writes NOT(state 5)
    /// to state 7.
    pub(crate) fn not_gate_genome() -> Genome {
        let mut bytes = vec![42, 213, 0, 0, 5, 0, 0, 0, 7, 0, 0, 0, 1];
        bytes.resize(500, 0);
        Genome::from_bytes(bytes).unwrap()
    }

    #[test]
    fn genome_length_bounds() {
        assert!(Genome::from_bytes(vec![0; 499]).is_err());
        assert!(Genome::from_bytes(vec![0; 500]).is_ok());
        assert!(Genome::from_bytes(vec![0; 10_000]).is_ok());
        assert!(Genome::from_bytes(vec![0; 10_001]).is_err());
    }

    #[test]
    fn all_zero_genome_decodes_to_empty_network() {
        let net = decode_genome(&zero_genome(500));
        assert!(net.is_empty());
    }

    #[test]
    fn not_gate_decodes_as_worked_example() {
        let net = decode_genome(&not_gate_genome());
        assert_eq!(net.gates().len(), 1);
        let gate = &net.gates()[0];
        assert_eq!(gate.n_in(), 1);
        assert_eq!(gate.n_out(), 1);
        assert_eq!(gate.input_ids(), &[5]);
        assert_eq!(gate.output_ids(), &[7]);
        assert_eq!(gate.table(), &[1, 0]);
    }

    #[test]
    fn gene_too_close_to_end_is_discarded() {
        // Codon 20 bytes before the end: footprint would need 28.
        let mut bytes = vec![0u8; 500];
        bytes[480] = START_CODON[0];
        bytes[481] = START_CODON[1];
        let net = decode_genome(&Genome::from_bytes(bytes.clone()).unwrap());
        assert!(net.is_empty());
        // Exactly 28 bytes from the end decodes fine.
        bytes[480] = 0;
        bytes[481] = 0;
        bytes[472] = START_CODON[0];
        bytes[473] = START_CODON[1];
        let net = decode_genome(&Genome::from_bytes(bytes).unwrap());
        assert_eq!(net.gates().len(), 1);
    }

    #[test]
    fn overlapping_genes_both_decode() {
        // Second codon inside the first gene's footprint.
        let mut bytes = vec![0u8; 500];
        bytes[0] = START_CODON[0];
        bytes[1] = START_CODON[1];
        bytes[10] = START_CODON[0];
        bytes[11] = START_CODON[1];
        let net = decode_genome(&Genome::from_bytes(bytes).unwrap());
        assert_eq!(net.gates().len(), 2);
    }

    #[test]
    fn same_genome_decodes_identically() {
        let g = not_gate_genome();
        assert_eq!(decode_genome(&g), decode_genome(&g));
    }

    #[test]
    fn empty_network_steps_to_zero() {
        let net = decode_genome(&zero_genome(500));
        let mut s = StateVector::ZERO;
        s.set(3, true);
        s.set(63, true);
        assert_eq!(brain_step(&net, s), StateVector::ZERO);
    }

    #[test]
    fn not_gate_inverts_its_input() {
        let net = decode_genome(&not_gate_genome());
        let out = brain_step(&net, StateVector::ZERO);
        assert_eq!(out.bits(), 1 << 7);
        let mut s = StateVector::ZERO;
        s.set(5, true);
        assert_eq!(brain_step(&net, s), StateVector::ZERO);
    }

    #[test]
    fn colliding_writes_or_together() {
        // One gate writes 0 to state 7, another writes 1.
        let writes_zero = Gate::new(vec![0], vec![7], vec![0, 0]);
        let writes_one = Gate::new(vec![0], vec![7], vec![1, 1]);
        let net = GateNetwork::from_gates(vec![writes_zero, writes_one]);
        let out = brain_step(&net, StateVector::ZERO);
        assert!(out.get(7));
        assert_eq!(out.bits(), 1 << 7);
    }

    #[test]
    fn digest_distinguishes_genomes() {
        let a = zero_genome(500);
        let b = not_gate_genome();
        assert_eq!(genome_digest(&a), genome_digest(&a));
        assert_ne!(genome_digest(&a), genome_digest(&b));
    }

    #[test]
    fn digest_of_zero_genome_matches_golden_value() {
        // sha256 of 500 zero bytes, computed once out of band.
        assert_eq!(
            genome_digest(&zero_genome(500)).to_hex(),
            "e6304a473c65ecd0ccffbd2f5925a8f51c44b11f59b66cfcc055e4bb911b8fa0"
        );
    }

    #[test]
    fn genome_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("elite.genome");
        let g = not_gate_genome();
        let meta = GenomeMetadata {
            length: g.len(),
            digest: g.digest().to_hex(),
            generation: 17,
            fitness: 0.25,
            seed: 99,
        };
        g.save(&path, &meta).unwrap();
        assert_eq!(Genome::load(&path).unwrap(), g);
        assert_eq!(GenomeMetadata::load(&path).unwrap(), meta);
    }
}
