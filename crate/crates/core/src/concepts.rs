//! Boolean functions, phase states, the hidden-matching relation, and the
//! concept distributions built on top of it.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::mflearner::ClassicalRep;
use crate::prf::{prf_eval_index, sample_key, PrfKey, PrfSpec};
use crate::qsim::{StateVector, DEFAULT_QUBIT_CAP};
use crate::stats::{derive_seed, rng_from};

/// Largest `n` for which a truth table is materialized (16 MiB packed).
pub const TABLE_CAP: usize = 24;
/// Largest `n` for which exact distributions over `{0,1}^(2n+1)` are built.
pub const EXACT_CAP: usize = 12;
/// PRF inputs share the block with a length tag.
pub const PRF_INPUT_CAP: usize = 56;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Backing {
    Table(Arc<BitVec>),
    Prf { spec: PrfSpec, key: PrfKey },
}

/// `f: {0,1}^n -> {0,1}`, as an explicit truth table or a PRF key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoolFunc {
    n: usize,
    backing: Backing,
}

impl BoolFunc {
    /// Truth table listed by input label: `table[y] = f(y)`.
    pub fn from_table(table: &[bool]) -> Result<Self> {
        Self::from_truth_table(BitVec::from_bools(table))
    }

    pub fn from_truth_table(table: BitVec) -> Result<Self> {
        let len = table.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::dim(format!("truth table of length {len} is not 2^n")));
        }
        let n = len.trailing_zeros() as usize;
        if n > TABLE_CAP {
            return Err(Error::Capacity { what: "truth table", n, cap: TABLE_CAP });
        }
        Ok(BoolFunc { n, backing: Backing::Table(Arc::new(table)) })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n > TABLE_CAP {
            return Err(Error::Capacity { what: "truth table", n, cap: TABLE_CAP });
        }
        Self::from_truth_table(BitVec::random(1 << n, rng))
    }

    pub fn from_prf(spec: PrfSpec, key: PrfKey, n: usize) -> Result<Self> {
        if n > PRF_INPUT_CAP {
            return Err(Error::Capacity { what: "PRF input", n, cap: PRF_INPUT_CAP });
        }
        Ok(BoolFunc { n, backing: Backing::Prf { spec, key } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prf_key(&self) -> Option<&PrfKey> {
        match &self.backing {
            Backing::Prf { key, .. } => Some(key),
            Backing::Table(_) => None,
        }
    }

    #[inline]
    pub fn query(&self, y: usize) -> bool {
        match &self.backing {
            Backing::Table(t) => t.get(y),
            Backing::Prf { key, .. } => prf_eval_index(key, self.n, y as u64),
        }
    }

    pub fn query_bits(&self, y: &BitVec) -> Result<bool> {
        if y.len() != self.n {
            return Err(Error::dim(format!("query of length {} to a function on {} bits", y.len(), self.n)));
        }
        Ok(self.query(y.as_index()))
    }

    /// Full truth table; exhaustively queries PRF-backed functions.
    pub fn truth_table(&self) -> Result<BitVec> {
        match &self.backing {
            Backing::Table(t) => Ok(t.as_ref().clone()),
            Backing::Prf { .. } => {
                if self.n > TABLE_CAP {
                    return Err(Error::Capacity { what: "truth table", n: self.n, cap: TABLE_CAP });
                }
                let mut t = BitVec::zeros(1 << self.n);
                for y in 0..1usize << self.n {
                    if self.query(y) {
                        t.set(y, true);
                    }
                }
                Ok(t)
            }
        }
    }

    /// The same function with an explicit table backing.
    pub fn materialize(&self) -> Result<BoolFunc> {
        BoolFunc::from_truth_table(self.truth_table()?)
    }

    /// `f(y) xor f(y xor x)`.
    #[inline]
    pub fn edge_parity(&self, x: usize, y: usize) -> bool {
        self.query(y) ^ self.query(y ^ x)
    }
}

/// `(1/sqrt N) sum_i (-1)^{f(i)} |i>`.
pub fn prepare_phase_state(f: &BoolFunc) -> Result<StateVector> {
    if f.n() > DEFAULT_QUBIT_CAP {
        return Err(Error::Capacity { what: "phase state", n: f.n(), cap: DEFAULT_QUBIT_CAP });
    }
    let dim = 1usize << f.n();
    let a = 1.0 / (dim as f64).sqrt();
    let amps = (0..dim).map(|y| Complex64::new(if f.query(y) { -a } else { a }, 0.0)).collect();
    StateVector::from_amplitudes(amps)
}

fn check_x(f: &BoolFunc, x: &BitVec) -> Result<()> {
    if x.len() != f.n() {
        return Err(Error::dim(format!("x has {} bits, f takes {}", x.len(), f.n())));
    }
    Ok(())
}

/// All `(y, b)` with `b = f(y) xor f(y xor x)`, ordered by `y`.
pub fn relation_members(f: &BoolFunc, x: &BitVec) -> Result<Vec<(BitVec, bool)>> {
    check_x(f, x)?;
    let xi = x.as_index();
    Ok((0..1usize << f.n()).map(|y| (BitVec::from_u64(y as u64, f.n()), f.edge_parity(xi, y))).collect())
}

/// One draw `(x, y, b)` from a concept distribution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConceptSample {
    pub x: BitVec,
    pub y: BitVec,
    pub b: bool,
}

impl ConceptSample {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `x || y || b`: `2n + 1` bits.
    pub fn to_bits(&self) -> BitVec {
        self.x.concat(&self.y).concat(&BitVec::from_bools(&[self.b]))
    }

    pub fn from_bits(bits: &BitVec, n: usize) -> Result<Self> {
        if bits.len() != 2 * n + 1 {
            return Err(Error::dim(format!("{} bits cannot hold a sample with n = {n}", bits.len())));
        }
        Ok(ConceptSample { x: bits.slice(0, n), y: bits.slice(n, n), b: bits.get(2 * n) })
    }

    /// Outcome index in `{0,1}^(2n+1)` with the same layout as [`Self::to_bits`].
    pub fn index(&self) -> u64 {
        sample_index(self.n(), self.x.as_u64(), self.y.as_u64(), self.b)
    }

    /// Membership of `(y, b)` in the relation for this sample's `x`.
    pub fn satisfies(&self, f: &BoolFunc) -> bool {
        self.b == f.edge_parity(self.x.as_index(), self.y.as_index())
    }
}

#[inline]
pub fn sample_index(n: usize, x: u64, y: u64, b: bool) -> u64 {
    x | (y << n) | ((b as u64) << (2 * n))
}

/// A finite distribution over `{0,1}^width`, stored sparsely by outcome index.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    width: usize,
    probs: BTreeMap<u64, f64>,
}

impl Distribution {
    pub fn new(width: usize) -> Self {
        assert!(width < 64, "outcome space too wide");
        Distribution { width, probs: BTreeMap::new() }
    }

    pub fn point_mass(width: usize, outcome: u64) -> Self {
        let mut d = Self::new(width);
        d.add(outcome, 1.0);
        d
    }

    pub fn from_dense(width: usize, probs: &[f64]) -> Result<Self> {
        if probs.len() != 1usize << width {
            return Err(Error::dim(format!("{} probabilities for a {width}-bit space", probs.len())));
        }
        let mut d = Self::new(width);
        for (i, &p) in probs.iter().enumerate() {
            d.add(i as u64, p);
        }
        Ok(d)
    }

    pub fn add(&mut self, outcome: u64, p: f64) {
        debug_assert!(outcome >> self.width == 0);
        if p != 0.0 {
            *self.probs.entry(outcome).or_insert(0.0) += p;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn prob(&self, outcome: u64) -> f64 {
        self.probs.get(&outcome).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.probs.iter().map(|(&k, &v)| (k, v))
    }

    /// Outcomes carrying more than `tol` mass.
    pub fn support(&self, tol: f64) -> Vec<u64> {
        self.iter().filter(|&(_, p)| p > tol).map(|(k, _)| k).collect()
    }
}

/// Total variation distance `(1/2) sum |p_i - q_i|`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.width != q.width {
        return Err(Error::dim(format!("distributions over {} and {} bits", p.width, q.width)));
    }
    let mut l1 = 0.0;
    for (k, pv) in p.iter() {
        l1 += (pv - q.prob(k)).abs();
    }
    for (k, qv) in q.iter() {
        if !p.probs.contains_key(&k) {
            l1 += qv.abs();
        }
    }
    Ok((0.5 * l1).clamp(0.0, 1.0))
}

/// The exact concept distribution: mass `2^-n` on `(x, y, f(y) xor f(y xor x))` for every `y`.
pub fn concept_distribution(f: &BoolFunc, x: &BitVec) -> Result<Distribution> {
    check_x(f, x)?;
    let n = f.n();
    if n > EXACT_CAP {
        return Err(Error::Capacity { what: "exact distribution", n, cap: EXACT_CAP });
    }
    let xi = x.as_u64();
    let w = 1.0 / (1u64 << n) as f64;
    let mut d = Distribution::new(2 * n + 1);
    for y in 0..1u64 << n {
        d.add(sample_index(n, xi, y, f.edge_parity(xi as usize, y as usize)), w);
    }
    Ok(d)
}

pub fn concept_sample<R: Rng + ?Sized>(f: &BoolFunc, x: &BitVec, rng: &mut R) -> Result<ConceptSample> {
    check_x(f, x)?;
    let n = f.n();
    let y = rng.random::<u64>() & mask(n);
    let b = f.edge_parity(x.as_index(), y as usize);
    Ok(ConceptSample { x: x.clone(), y: BitVec::from_u64(y, n), b })
}

pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// The whole sample `(x, y, b)`.
    FullX,
    /// `(i . x, i)` for a fresh uniform `i`.
    Parity,
}

impl LabelMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LabelMode::FullX => "full-x",
            LabelMode::Parity => "parity",
        }
    }
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full-x" | "fullx" | "full" => Ok(LabelMode::FullX),
            "parity" => Ok(LabelMode::Parity),
            other => Err(Error::Parse(format!("unknown label mode `{other}` (expected full-x or parity)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Label {
    Full(ConceptSample),
    Parity { i: BitVec, parity: bool },
}

impl Label {
    pub fn mode(&self) -> LabelMode {
        match self {
            Label::Full(_) => LabelMode::FullX,
            Label::Parity { .. } => LabelMode::Parity,
        }
    }

    /// `Full`: the `2n+1` sample bits. `Parity`: bit 0 is `i . x`, bits `1..=n` are `i`.
    pub fn to_bits(&self) -> BitVec {
        match self {
            Label::Full(s) => s.to_bits(),
            Label::Parity { i, parity } => BitVec::from_bools(&[*parity]).concat(i),
        }
    }

    pub fn from_bits(mode: LabelMode, bits: &BitVec, n: usize) -> Result<Self> {
        match mode {
            LabelMode::FullX => Ok(Label::Full(ConceptSample::from_bits(bits, n)?)),
            LabelMode::Parity => {
                if bits.len() != n + 1 {
                    return Err(Error::dim(format!("parity label has {} bits, expected {}", bits.len(), n + 1)));
                }
                Ok(Label::Parity { parity: bits.get(0), i: bits.slice(1, n) })
            }
        }
    }
}

/// Where training functions come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FSource {
    UniformRandom,
    PrfKeys(PrfSpec),
}

impl FSource {
    pub fn name(&self) -> &'static str {
        match self {
            FSource::UniformRandom => "uniform",
            FSource::PrfKeys(_) => "prf",
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<BoolFunc> {
        match self {
            FSource::UniformRandom => BoolFunc::random(n, rng),
            FSource::PrfKeys(spec) => BoolFunc::from_prf(spec.clone(), sample_key(spec, rng), n),
        }
    }
}

/// `ell` copies of `|psi_f>`, held as the function plus a multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseCopies {
    pub f: BoolFunc,
    pub ell: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExampleState {
    Quantum(PhaseCopies),
    Measured(ClassicalRep),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingExample {
    pub state: ExampleState,
    pub label: Label,
}

impl TrainingExample {
    pub fn n(&self) -> usize {
        match &self.label {
            Label::Full(s) => s.n(),
            Label::Parity { i, .. } => i.len(),
        }
    }
}

/// Labels one function according to `mode`.
pub fn make_label<R: Rng + ?Sized>(f: &BoolFunc, x: &BitVec, mode: LabelMode, rng: &mut R) -> Result<Label> {
    match mode {
        LabelMode::FullX => Ok(Label::Full(concept_sample(f, x, rng)?)),
        LabelMode::Parity => {
            let i = BitVec::random(x.len(), rng);
            let parity = crate::gf2::dot(&i, x)?;
            Ok(Label::Parity { i, parity })
        }
    }
}

/// `count` examples, each with an independent `f`, `ell` copies of its phase
/// state, and a label for the hidden `x`.
///
/// Example `k` is generated from `derive_seed(base, k)` where `base` is one
/// draw from `rng`.
pub fn generate_training_data<R: Rng + ?Sized>(
    x: &BitVec,
    count: usize,
    ell: usize,
    mode: LabelMode,
    source: &FSource,
    rng: &mut R,
) -> Result<Vec<TrainingExample>> {
    if count == 0 || ell == 0 {
        return Err(Error::config("training data needs count >= 1 and ell >= 1"));
    }
    let n = x.len();
    if matches!(source, FSource::UniformRandom) && n > TABLE_CAP {
        return Err(Error::Capacity { what: "truth table", n, cap: TABLE_CAP });
    }
    let base: u64 = rng.random();
    (0..count)
        .map(|k| {
            let mut r = rng_from(derive_seed(base, k as u64));
            let f = source.draw(n, &mut r)?;
            let label = make_label(&f, x, mode, &mut r)?;
            Ok(TrainingExample { state: ExampleState::Quantum(PhaseCopies { f, ell }), label })
        })
        .collect()
}

// JSON-lines wire format.

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FWire {
    Table(String),
    Prf { prf_key: String },
}

#[derive(Serialize, Deserialize)]
struct LabelWire {
    mode: LabelMode,
    bits: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<FWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rep: Option<ClassicalRep>,
    ell: usize,
    label: LabelWire,
    n: usize,
}

impl TrainingExample {
    pub fn to_json(&self) -> Result<String> {
        let n = self.n();
        let label = LabelWire { mode: self.label.mode(), bits: self.label.to_bits().to_hex() };
        let wire = match &self.state {
            ExampleState::Quantum(PhaseCopies { f, ell }) => {
                let fw = match &f.backing {
                    Backing::Table(t) => FWire::Table(t.to_hex()),
                    Backing::Prf { key, .. } => FWire::Prf { prf_key: key.to_hex() },
                };
                ExampleWire { f: Some(fw), rep: None, ell: *ell, label, n }
            }
            ExampleState::Measured(rep) => ExampleWire { f: None, rep: Some(rep.clone()), ell: rep.ell, label, n },
        };
        Ok(serde_json::to_string(&wire)?)
    }

    /// PRF-keyed entries are rebuilt with `spec`.
    pub fn from_json(line: &str, spec: &PrfSpec) -> Result<Self> {
        let wire: ExampleWire = serde_json::from_str(line)?;
        let n = wire.n;
        let bits_len = match wire.label.mode {
            LabelMode::FullX => 2 * n + 1,
            LabelMode::Parity => n + 1,
        };
        let label = Label::from_bits(wire.label.mode, &BitVec::from_hex(&wire.label.bits, bits_len)?, n)?;
        let state = match (wire.f, wire.rep) {
            (Some(FWire::Table(h)), None) => {
                if n > TABLE_CAP {
                    return Err(Error::Capacity { what: "truth table", n, cap: TABLE_CAP });
                }
                let f = BoolFunc::from_truth_table(BitVec::from_hex(&h, 1 << n)?)?;
                ExampleState::Quantum(PhaseCopies { f, ell: wire.ell })
            }
            (Some(FWire::Prf { prf_key }), None) => {
                let f = BoolFunc::from_prf(spec.clone(), PrfKey::from_hex(&prf_key)?, n)?;
                ExampleState::Quantum(PhaseCopies { f, ell: wire.ell })
            }
            (None, Some(rep)) => ExampleState::Measured(rep.validate()?),
            _ => return Err(Error::Parse("example needs exactly one of `f` or `rep`".into())),
        };
        Ok(TrainingExample { state, label })
    }
}

pub fn write_jsonl<W: Write>(examples: &[TrainingExample], mut out: W) -> Result<()> {
    for ex in examples {
        writeln!(out, "{}", ex.to_json()?)?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R, spec: &PrfSpec) -> Result<Vec<TrainingExample>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|(i, line)| {
            TrainingExample::from_json(&line?, spec).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))
        })
        .collect()
}
