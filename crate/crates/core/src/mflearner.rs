//! Measure-first protocols: a fixed measurement strategy compresses each
//! batch of `ell` phase-state copies into `m` classical bits, and a learner
//! works from those bits alone.
//!
//! Three strategies are provided:
//!
//! * [`StrategyKind::RandomPauliShadows`]: per copy, a uniformly random Pauli
//!   basis on every qubit. Parity estimates use the inverse of the local
//!   Pauli measurement channel, `sigma = 3|s><s| - I` per qubit.
//! * [`StrategyKind::FourierSampling`]: per copy, `H` on every qubit, then a
//!   computational-basis measurement.
//! * [`StrategyKind::LeakyFullTable`]: the whole truth table. Exponential in
//!   `n`, so it is only accepted with an explicit budget override. It is the
//!   control arm showing the pipeline itself loses nothing.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::{prepare_phase_state, sample_index, BoolFunc, ConceptSample, Distribution, Label, LabelMode};
use crate::concepts::EXACT_CAP;
use crate::error::{Error, Result};
use crate::fqlearner::recover_x;
use crate::gf2::{dot_u64, BitVec};
use crate::qsim::StateVector;
use crate::stats::{derive_seed, median, rng_from};

/// Median-of-means group count for shadow parity estimates.
pub const MOM_GROUPS: usize = 10;

pub fn default_ell(n: usize) -> usize {
    10 * n * n
}

pub fn default_m_budget(n: usize, ell: usize) -> usize {
    3 * n * ell
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StrategyKind {
    /// `seed` salts the basis schedule so distinct strategy instances draw
    /// independent bases from the same measurement randomness.
    RandomPauliShadows { seed: u64 },
    FourierSampling,
    LeakyFullTable,
}

impl StrategyKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            StrategyKind::RandomPauliShadows { .. } => "shadow",
            StrategyKind::FourierSampling => "fourier",
            StrategyKind::LeakyFullTable => "leaky",
        }
    }

    pub fn layout(&self) -> &'static str {
        match self {
            StrategyKind::RandomPauliShadows { .. } => "pauli3-v1",
            StrategyKind::FourierSampling => "fourier-v1",
            StrategyKind::LeakyFullTable => "table-v1",
        }
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shadow" | "shadows" => Ok(StrategyKind::RandomPauliShadows { seed: 0 }),
            "fourier" => Ok(StrategyKind::FourierSampling),
            "leaky" => Ok(StrategyKind::LeakyFullTable),
            other => Err(Error::Parse(format!("unknown strategy `{other}` (expected shadow, fourier or leaky)"))),
        }
    }
}

/// A measurement strategy fixed before any label or target concept is seen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// Copies consumed per measurement.
    pub ell: usize,
    /// Largest honest representation size; `None` means [`default_m_budget`].
    pub m_budget: Option<usize>,
    /// Lets [`StrategyKind::LeakyFullTable`] exceed the budget.
    pub allow_leaky: bool,
}

impl Strategy {
    pub fn new(kind: StrategyKind, ell: usize) -> Self {
        Strategy { kind, ell, m_budget: None, allow_leaky: false }
    }

    pub fn shadows(ell: usize, seed: u64) -> Self {
        Self::new(StrategyKind::RandomPauliShadows { seed }, ell)
    }

    pub fn fourier(ell: usize) -> Self {
        Self::new(StrategyKind::FourierSampling, ell)
    }

    /// The full-table control arm with its budget override set.
    pub fn leaky() -> Self {
        Strategy { kind: StrategyKind::LeakyFullTable, ell: 1, m_budget: None, allow_leaky: true }
    }

    pub fn id(&self) -> String {
        match self.kind {
            StrategyKind::RandomPauliShadows { seed } => format!("shadow:salt={seed:016x}:ell={}", self.ell),
            StrategyKind::FourierSampling => format!("fourier:ell={}", self.ell),
            StrategyKind::LeakyFullTable => "leaky".into(),
        }
    }

    /// Representation size in bits at input length `n`.
    pub fn m(&self, n: usize) -> usize {
        match self.kind {
            StrategyKind::RandomPauliShadows { .. } => 3 * n * self.ell,
            StrategyKind::FourierSampling => n * self.ell,
            StrategyKind::LeakyFullTable => 1 << n,
        }
    }

    pub fn budget(&self, n: usize) -> usize {
        self.m_budget.unwrap_or_else(|| default_m_budget(n, self.ell))
    }

    pub fn is_honest(&self, n: usize) -> bool {
        self.m(n) <= self.budget(n)
    }

    fn check_copies(&self, ell: usize) -> Result<()> {
        if ell != self.ell {
            return Err(Error::Budget(format!("strategy is fixed to {} copies, got {ell}", self.ell)));
        }
        Ok(())
    }

    fn rep(&self, n: usize, bits: BitVec) -> ClassicalRep {
        ClassicalRep { strategy: self.id(), n, ell: self.ell, m: bits.len(), bits, layout: self.kind.layout().into() }
    }

    fn check_budget(&self, n: usize) -> Result<()> {
        if self.is_honest(n) {
            return Ok(());
        }
        if self.kind == StrategyKind::LeakyFullTable && self.allow_leaky {
            return Ok(());
        }
        Err(Error::Budget(format!(
            "strategy {} needs m = {} bits at n = {n}, budget is {}",
            self.id(),
            self.m(n),
            self.budget(n)
        )))
    }
}

/// The classical record a strategy produces: `m` bits plus enough metadata to decode them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalRep {
    pub strategy: String,
    pub n: usize,
    pub ell: usize,
    pub m: usize,
    #[serde(with = "hex_bits")]
    pub bits: BitVec,
    pub layout: String,
}

mod hex_bits {
    use super::BitVec;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &BitVec, s: S) -> Result<S::Ok, S::Error> {
        // Length travels in the sibling `m` field.
        s.serialize_str(&bits.to_hex())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BitVec, D::Error> {
        let h = String::deserialize(d)?;
        // The exact length is restored in `ClassicalRep::validate`.
        let bytes = hex::decode(&h).map_err(serde::de::Error::custom)?;
        BitVec::from_bytes(&bytes, bytes.len() * 8).map_err(serde::de::Error::custom)
    }
}

impl ClassicalRep {
    /// Restores the bit length after deserialization and checks the layout arithmetic.
    pub fn validate(mut self) -> Result<Self> {
        if self.bits.len() != self.m {
            if self.bits.len() < self.m || self.bits.len() - self.m >= 8 {
                return Err(Error::Parse(format!("rep carries {} bits, m = {}", self.bits.len(), self.m)));
            }
            let trimmed = self.bits.slice(0, self.m);
            if trimmed.count_ones() != self.bits.count_ones() {
                return Err(Error::Parse("nonzero padding in rep bits".into()));
            }
            self.bits = trimmed;
        }
        let expected = match self.layout.as_str() {
            "pauli3-v1" => 3 * self.n * self.ell,
            "fourier-v1" => self.n * self.ell,
            "table-v1" => 1 << self.n,
            other => return Err(Error::Parse(format!("unknown rep layout `{other}`"))),
        };
        if expected != self.m {
            return Err(Error::Parse(format!("layout {} implies m = {expected}, got {}", self.layout, self.m)));
        }
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ClassicalRep>(s)?.validate()
    }

    fn expect_layout(&self, layout: &str) -> Result<()> {
        if self.layout != layout {
            return Err(Error::StrategyMismatch { expected: layout.into(), found: self.layout.clone() });
        }
        Ok(())
    }

    /// Basis code (0 = X, 1 = Y, 2 = Z) and outcome bit of qubit `q` in copy `c`.
    #[inline]
    fn pauli_record(&self, c: usize, q: usize) -> (u8, bool) {
        let off = 3 * (c * self.n + q);
        let basis = self.bits.get(off) as u8 | ((self.bits.get(off + 1) as u8) << 1);
        (basis, self.bits.get(off + 2))
    }

    fn fourier_outcome(&self, c: usize) -> u64 {
        (0..self.n).fold(0u64, |acc, q| acc | ((self.bits.get(c * self.n + q) as u64) << q))
    }
}

/// Applies the strategy to `ell` copies of `|psi_f>`. Takes no label and no
/// `x`, so the output depends on `(strategy, f, ell, rng)` only.
pub fn measure<R: Rng + ?Sized>(strategy: &Strategy, f: &BoolFunc, ell: usize, rng: &mut R) -> Result<ClassicalRep> {
    if strategy.kind == StrategyKind::LeakyFullTable {
        // No state needed: the control arm records the table directly.
        strategy.check_copies(ell)?;
        strategy.check_budget(f.n())?;
        let bits = f.truth_table()?;
        return Ok(strategy.rep(f.n(), bits));
    }
    measure_state(strategy, &prepare_phase_state(f)?, ell, rng)
}

/// [`measure`] on an already prepared single-copy state `psi`; each of the
/// `ell` copies is a fresh copy of `psi`.
///
/// The leaky strategy reads the table off the amplitude signs, which is only
/// meaningful for phase states.
pub fn measure_state<R: Rng + ?Sized>(
    strategy: &Strategy,
    psi: &StateVector,
    ell: usize,
    rng: &mut R,
) -> Result<ClassicalRep> {
    strategy.check_copies(ell)?;
    let n = psi.n();
    strategy.check_budget(n)?;
    let mut bits = BitVec::zeros(strategy.m(n));
    match strategy.kind {
        StrategyKind::RandomPauliShadows { seed } => {
            let mut basis_rng = rng_from(derive_seed(seed, rng.random()));
            let mut work = psi.clone();
            let mut bases = vec![0u8; n];
            for c in 0..ell {
                work.clone_from(psi);
                for (q, b) in bases.iter_mut().enumerate() {
                    *b = basis_rng.random_range(0..3u8);
                    rotate_to_z(&mut work, q, *b);
                }
                let outcome = work.sample_index(rng);
                for (q, &b) in bases.iter().enumerate() {
                    let off = 3 * (c * n + q);
                    bits.set(off, b & 1 == 1);
                    bits.set(off + 1, b & 2 == 2);
                    bits.set(off + 2, (outcome >> q) & 1 == 1);
                }
            }
        }
        StrategyKind::FourierSampling => {
            let mut s = psi.clone();
            for q in 0..n {
                s.hadamard(q);
            }
            for c in 0..ell {
                let outcome = s.sample_index(rng);
                for q in 0..n {
                    bits.set(c * n + q, (outcome >> q) & 1 == 1);
                }
            }
        }
        StrategyKind::LeakyFullTable => {
            for (y, a) in psi.amplitudes().iter().enumerate() {
                bits.set(y, a.re < 0.0);
            }
        }
    }
    Ok(strategy.rep(n, bits))
}

fn rotate_to_z(s: &mut StateVector, q: usize, basis: u8) {
    match basis {
        0 => s.hadamard(q),
        1 => {
            s.apply_mut(&crate::qsim::GateOp::Sdg(q)).expect("qubit in range");
            s.hadamard(q);
        }
        _ => {}
    }
}

/// Single-snapshot estimate from copy `c` of `<psi|(|y><y'| + |y'><y|)|psi>`, `y' = y xor x`.
///
/// Equals `2 Re prod_q <y'_q| sigma_q |y_q>` with `sigma_q = 3|s_q><s_q| - I`.
pub fn snapshot_parity(rep: &ClassicalRep, c: usize, y: u64, x: u64) -> f64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for q in 0..rep.n {
        let (basis, s) = rep.pauli_record(c, q);
        let yq = (y >> q) & 1 == 1;
        let sign = if s { -1.0 } else { 1.0 };
        let entry = if (x >> q) & 1 == 1 {
            // Off-diagonal <not y_q| sigma |y_q>.
            match basis {
                0 => Complex64::new(1.5 * sign, 0.0),
                1 => Complex64::new(0.0, if yq { -1.5 * sign } else { 1.5 * sign }),
                _ => return 0.0,
            }
        } else {
            match basis {
                2 => Complex64::new(if yq == s { 2.0 } else { -1.0 }, 0.0),
                _ => Complex64::new(0.5, 0.0),
            }
        };
        acc *= entry;
    }
    2.0 * acc.re
}

fn check_shadow(rep: &ClassicalRep) -> Result<()> {
    rep.expect_layout(StrategyKind::RandomPauliShadows { seed: 0 }.layout())
}

/// Plain mean of the `ell` snapshot estimates (unbiased).
pub fn shadow_mean_parity(rep: &ClassicalRep, y: &BitVec, x: &BitVec) -> Result<f64> {
    check_shadow(rep)?;
    let (yi, xi) = (y.as_u64(), x.as_u64());
    Ok((0..rep.ell).map(|c| snapshot_parity(rep, c, yi, xi)).sum::<f64>() / rep.ell as f64)
}

/// Median-of-means shadow estimate of the edge observable for `{y, y xor x}`.
/// True value: `(2/N) (-1)^{f(y) xor f(y xor x)}`.
pub fn shadow_estimate_parity(rep: &ClassicalRep, y: &BitVec, x: &BitVec) -> Result<f64> {
    check_shadow(rep)?;
    if y.len() != rep.n || x.len() != rep.n {
        return Err(Error::dim(format!("rep on {} qubits, y/x of {}/{} bits", rep.n, y.len(), x.len())));
    }
    Ok(mom_estimate(rep, y.as_u64(), x.as_u64()))
}

fn mom_estimate(rep: &ClassicalRep, y: u64, x: u64) -> f64 {
    let groups = MOM_GROUPS.min(rep.ell);
    let means: Vec<f64> = (0..groups)
        .map(|g| {
            let (lo, hi) = (g * rep.ell / groups, (g + 1) * rep.ell / groups);
            (lo..hi).map(|c| snapshot_parity(rep, c, y, x)).sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    median(&means)
}

/// How a trained generator turns a fresh rep into a parity guess.
#[derive(Clone, Debug, PartialEq)]
enum InferenceRule {
    /// Sign of the median-of-means shadow estimate; 0 is a fair coin.
    ShadowSign,
    /// `s . x` for the most frequent Fourier outcome `s` (ties to the smallest label).
    FourierMode,
    /// Exact lookup in the recorded table.
    TableLookup,
}

/// A trained measure-first generator. It only ever consumes [`ClassicalRep`]s.
#[derive(Clone, Debug, PartialEq)]
pub struct MfGenerator {
    x: BitVec,
    strategy_id: String,
    layout: String,
    rule: InferenceRule,
    label_mode: LabelMode,
    examples_used: usize,
}

/// Parity guess for one `y` given a rep: `Some(b)` or `None` for a coin flip.
enum Guess {
    Bit(bool),
    Coin,
}

impl MfGenerator {
    pub fn x(&self) -> &BitVec {
        &self.x
    }

    pub fn strategy_id(&self) -> &str {
        &self.strategy_id
    }

    pub fn label_mode(&self) -> LabelMode {
        self.label_mode
    }

    pub fn examples_used(&self) -> usize {
        self.examples_used
    }

    fn check_rep(&self, rep: &ClassicalRep) -> Result<()> {
        if rep.strategy != self.strategy_id || rep.layout != self.layout {
            return Err(Error::StrategyMismatch { expected: self.strategy_id.clone(), found: rep.strategy.clone() });
        }
        if rep.n != self.x.len() {
            return Err(Error::dim(format!("rep on {} qubits, generator for n = {}", rep.n, self.x.len())));
        }
        Ok(())
    }

    /// Per-rep state shared by every `y` (the Fourier mode, for instance).
    fn prepare(&self, rep: &ClassicalRep) -> Option<bool> {
        match self.rule {
            InferenceRule::FourierMode => {
                let mut counts = std::collections::BTreeMap::<u64, usize>::new();
                for c in 0..rep.ell {
                    *counts.entry(rep.fourier_outcome(c)).or_default() += 1;
                }
                let best = counts.iter().fold((0u64, 0usize), |acc, (&s, &k)| if k > acc.1 { (s, k) } else { acc });
                Some(dot_u64(best.0, self.x.as_u64()))
            }
            _ => None,
        }
    }

    fn guess(&self, rep: &ClassicalRep, fourier: Option<bool>, y: u64) -> Guess {
        let x = self.x.as_u64();
        match self.rule {
            InferenceRule::ShadowSign => {
                let est = mom_estimate(rep, y, x);
                if est > 0.0 {
                    Guess::Bit(false)
                } else if est < 0.0 {
                    Guess::Bit(true)
                } else {
                    Guess::Coin
                }
            }
            InferenceRule::FourierMode => Guess::Bit(fourier.expect("prepared")),
            InferenceRule::TableLookup => {
                Guess::Bit(rep.bits.get(y as usize) ^ rep.bits.get((y ^ x) as usize))
            }
        }
    }

    /// Exact output distribution conditioned on `rep`.
    pub fn exact_distribution(&self, rep: &ClassicalRep) -> Result<Distribution> {
        self.check_rep(rep)?;
        let n = self.x.len();
        if n > EXACT_CAP {
            return Err(Error::Capacity { what: "exact distribution", n, cap: EXACT_CAP });
        }
        let x = self.x.as_u64();
        let w = 1.0 / (1u64 << n) as f64;
        let fourier = self.prepare(rep);
        let mut d = Distribution::new(2 * n + 1);
        for y in 0..1u64 << n {
            // The edge observable is symmetric in its endpoints; evaluate once per edge.
            let rep_y = y.min(y ^ x);
            match self.guess(rep, fourier, rep_y) {
                Guess::Bit(b) => d.add(sample_index(n, x, y, b), w),
                Guess::Coin => {
                    d.add(sample_index(n, x, y, false), w / 2.0);
                    d.add(sample_index(n, x, y, true), w / 2.0);
                }
            }
        }
        Ok(d)
    }
}

/// Trains on `(rep, label)` pairs: recovers `x` from the labels and fixes the
/// inference rule that matches the strategy.
pub fn measure_first_learn(strategy: &Strategy, data: &[(ClassicalRep, Label)]) -> Result<MfGenerator> {
    let first = data.first().ok_or_else(|| Error::CorruptData("empty training set".into()))?;
    let id = strategy.id();
    if let Some((rep, _)) = data.iter().find(|(rep, _)| rep.strategy != id) {
        return Err(Error::StrategyMismatch { expected: id, found: rep.strategy.clone() });
    }
    let mode = first.1.mode();
    let labels: Vec<Label> = data.iter().map(|(_, l)| l.clone()).collect();
    let x = recover_x(&labels, mode)?;
    let rule = match strategy.kind {
        StrategyKind::RandomPauliShadows { .. } => InferenceRule::ShadowSign,
        StrategyKind::FourierSampling => InferenceRule::FourierMode,
        StrategyKind::LeakyFullTable => InferenceRule::TableLookup,
    };
    Ok(MfGenerator {
        x,
        strategy_id: id,
        layout: strategy.kind.layout().into(),
        rule,
        label_mode: mode,
        examples_used: data.len(),
    })
}

/// Draws `(x, y, b)` from the generator's distribution for this rep.
pub fn mf_generate<R: Rng + ?Sized>(gen: &MfGenerator, rep: &ClassicalRep, rng: &mut R) -> Result<ConceptSample> {
    gen.check_rep(rep)?;
    let n = gen.x.len();
    let x = gen.x.as_u64();
    let y = rng.random::<u64>() & crate::concepts::mask(n);
    let fourier = gen.prepare(rep);
    let b = match gen.guess(rep, fourier, y.min(y ^ x)) {
        Guess::Bit(b) => b,
        Guess::Coin => rng.random(),
    };
    Ok(ConceptSample { x: gen.x.clone(), y: BitVec::from_u64(y, n), b })
}

/// Measures every training state with `strategy`, producing the learner's input.
///
/// Example `k` is measured with `derive_seed(base, k)`, `base` drawn from `rng`.
pub fn measure_dataset<R: Rng + ?Sized>(
    strategy: &Strategy,
    data: &[crate::concepts::TrainingExample],
    rng: &mut R,
) -> Result<Vec<(ClassicalRep, Label)>> {
    use crate::concepts::ExampleState;
    let base: u64 = rng.random();
    data.iter()
        .enumerate()
        .map(|(k, ex)| {
            let rep = match &ex.state {
                ExampleState::Quantum(copies) => {
                    measure(strategy, &copies.f, copies.ell, &mut rng_from(derive_seed(base, k as u64)))?
                }
                ExampleState::Measured(rep) => rep.clone(),
            };
            Ok((rep, ex.label.clone()))
        })
        .collect()
}

/// How a measure-first learner obtains its training set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LearnerConfig {
    pub label_mode: LabelMode,
    /// Examples per training set; `None` means [`default_train_count`].
    pub train_count: Option<usize>,
    pub source: crate::concepts::FSource,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { label_mode: LabelMode::FullX, train_count: None, source: crate::concepts::FSource::UniformRandom }
    }
}

/// Full labels carry `x` verbatim, so a handful suffices; parity labels need
/// `n + 10` for the label system to be full rank with probability about `1 - 2^-10`.
pub fn default_train_count(n: usize, mode: LabelMode) -> usize {
    match mode {
        LabelMode::FullX => 4,
        LabelMode::Parity => n + 10,
    }
}

impl LearnerConfig {
    pub fn count(&self, n: usize) -> usize {
        self.train_count.unwrap_or_else(|| default_train_count(n, self.label_mode))
    }
}

/// Generates `T_x^M` for `x`, measures it with `strategy`, and trains.
pub fn train_measure_first<R: Rng + ?Sized>(
    strategy: &Strategy,
    cfg: &LearnerConfig,
    x: &BitVec,
    rng: &mut R,
) -> Result<MfGenerator> {
    let data = crate::concepts::generate_training_data(x, cfg.count(x.len()), strategy.ell, cfg.label_mode, &cfg.source, rng)?;
    measure_first_learn(strategy, &measure_dataset(strategy, &data, rng)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{concept_distribution, concept_sample, generate_training_data, tv_distance, FSource};
    use crate::stats::SimRng;
    use rand::SeedableRng;

    fn table(bits: &[u8]) -> BoolFunc {
        BoolFunc::from_table(&bits.iter().map(|&b| b == 1).collect::<Vec<_>>()).unwrap()
    }

    fn train(strategy: &Strategy, x: &BitVec, rng: &mut SimRng) -> MfGenerator {
        let data = generate_training_data(x, 3, strategy.ell, LabelMode::FullX, &FSource::UniformRandom, rng).unwrap();
        measure_first_learn(strategy, &measure_dataset(strategy, &data, rng).unwrap()).unwrap()
    }

    #[test]
    fn fourier_of_constant_is_zero() {
        let mut rng = SimRng::seed_from_u64(1);
        let f = table(&[0; 8]);
        for ell in [1, 5, 17] {
            let rep = measure(&Strategy::fourier(ell), &f, ell, &mut rng).unwrap();
            assert_eq!(rep.m, 3 * ell);
            assert!(rep.bits.is_zero());
        }
    }

    #[test]
    fn layout_sizes() {
        let mut rng = SimRng::seed_from_u64(2);
        let f = table(&[0, 1, 1, 0]);
        let rep = measure(&Strategy::shadows(5, 9), &f, 5, &mut rng).unwrap();
        assert_eq!((rep.m, rep.bits.len()), (30, 30));
        let leaky = measure(&Strategy::leaky(), &f, 1, &mut rng).unwrap();
        assert_eq!(leaky.bits, BitVec::from_bools(&[false, true, true, false]));
        assert!(measure(&Strategy::shadows(5, 9), &f, 4, &mut rng).is_err());
    }

    #[test]
    fn leaky_needs_override() {
        let mut rng = SimRng::seed_from_u64(3);
        let f = BoolFunc::random(8, &mut rng).unwrap();
        let strict = Strategy { allow_leaky: false, ..Strategy::leaky() };
        assert!(matches!(measure(&strict, &f, 1, &mut rng), Err(Error::Budget(_))));
        // At tiny n the table fits inside 3n bits and needs no override.
        assert!(measure(&strict, &table(&[0, 1]), 1, &mut rng).is_ok());
    }

    #[test]
    fn measurement_is_seeded() {
        let f = table(&[1, 0, 0, 1, 1, 1, 0, 0]);
        let s = Strategy::shadows(20, 4);
        let a = measure(&s, &f, 20, &mut SimRng::seed_from_u64(7)).unwrap();
        let b = measure(&s, &f, 20, &mut SimRng::seed_from_u64(7)).unwrap();
        let c = measure(&s, &f, 20, &mut SimRng::seed_from_u64(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn shadow_estimate_single_qubit() {
        let mut rng = SimRng::seed_from_u64(4);
        let (x, y) = (BitVec::from_u64(1, 1), BitVec::from_u64(0, 1));
        let s = Strategy::shadows(100_000, 1);
        let plus = measure(&s, &table(&[0, 0]), s.ell, &mut rng).unwrap();
        assert!((shadow_estimate_parity(&plus, &y, &x).unwrap() - 1.0).abs() <= 0.05);
        let minus = measure(&s, &table(&[0, 1]), s.ell, &mut rng).unwrap();
        assert!((shadow_estimate_parity(&minus, &y, &x).unwrap() + 1.0).abs() <= 0.05);
    }

    #[test]
    fn shadow_estimate_wrong_layout() {
        let mut rng = SimRng::seed_from_u64(5);
        let rep = measure(&Strategy::fourier(3), &table(&[0, 1]), 3, &mut rng).unwrap();
        let v = BitVec::from_u64(1, 1);
        assert!(matches!(shadow_estimate_parity(&rep, &v, &v), Err(Error::StrategyMismatch { .. })));
    }

    /// Exact expectation of one snapshot, by summing over bases and Born-rule outcomes.
    fn exact_snapshot_expectation(f: &BoolFunc, y: u64, x: u64) -> f64 {
        let n = f.n();
        let psi = prepare_phase_state(f).unwrap();
        let mut total = 0.0;
        for code in 0..3usize.pow(n as u32) {
            let bases: Vec<u8> = (0..n).map(|q| ((code / 3usize.pow(q as u32)) % 3) as u8).collect();
            let mut s = psi.clone();
            for (q, &b) in bases.iter().enumerate() {
                rotate_to_z(&mut s, q, b);
            }
            for (outcome, p) in s.outcome_distribution().into_iter().enumerate() {
                let mut bits = BitVec::zeros(3 * n);
                for (q, &b) in bases.iter().enumerate() {
                    bits.set(3 * q, b & 1 == 1);
                    bits.set(3 * q + 1, b & 2 == 2);
                    bits.set(3 * q + 2, (outcome >> q) & 1 == 1);
                }
                let rep = ClassicalRep { strategy: String::new(), n, ell: 1, m: 3 * n, bits, layout: "pauli3-v1".into() };
                total += p * snapshot_parity(&rep, 0, y, x);
            }
        }
        total / 3f64.powi(n as i32)
    }

    #[test]
    fn snapshot_expectation_is_exact() {
        let mut rng = SimRng::seed_from_u64(6);
        for n in 1..=3 {
            for _ in 0..4 {
                let f = BoolFunc::random(n, &mut rng).unwrap();
                for x in 1..1u64 << n {
                    for y in 0..1u64 << n {
                        let truth = if f.edge_parity(x as usize, y as usize) { -2.0 } else { 2.0 } / (1 << n) as f64;
                        assert!((exact_snapshot_expectation(&f, y, x) - truth).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn single_copy_estimator_is_unbiased() {
        let mut rng = SimRng::seed_from_u64(7);
        let s = Strategy::shadows(1, 3);
        for n in 1..=3 {
            let f = BoolFunc::random(n, &mut rng).unwrap();
            let x = BitVec::from_u64((1u64 << n) - 1, n);
            let y = BitVec::from_u64(0, n);
            let truth = if f.edge_parity(x.as_index(), 0) { -2.0 } else { 2.0 } / (1 << n) as f64;
            let reps = 100_000;
            let vals: Vec<f64> =
                (0..reps).map(|_| shadow_mean_parity(&measure(&s, &f, 1, &mut rng).unwrap(), &y, &x).unwrap()).collect();
            let mean = vals.iter().sum::<f64>() / reps as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
            let se = (var / reps as f64).sqrt();
            assert!((mean - truth).abs() <= 5.0 * se, "n={n}: mean {mean} truth {truth} se {se}");
        }
    }

    /// Sign accuracy of the estimate at n = 6 follows the normal approximation
    /// `Phi(mu sqrt(ell) / sigma)` built from the measured single-copy spread,
    /// and sits only slightly above a coin flip.
    #[test]
    fn shadow_sign_accuracy_near_coin_at_six_qubits() {
        use statrs::distribution::ContinuousCDF;
        let mut rng = SimRng::seed_from_u64(8);
        let n = 6;
        let ell = 300;
        let s = Strategy::shadows(ell, 5);
        let (mut correct, mut total) = (0usize, 0usize);
        let (mut sum_sq, mut draws) = (0.0, 0usize);
        for _ in 0..30 {
            let f = BoolFunc::random(n, &mut rng).unwrap();
            let x = BitVec::from_u64(rng.random_range(1..1u64 << n), n);
            let rep = measure(&s, &f, ell, &mut rng).unwrap();
            for y in 0..1u64 << n {
                if y > y ^ x.as_u64() {
                    continue;
                }
                for c in 0..ell {
                    sum_sq += snapshot_parity(&rep, c, y, x.as_u64()).powi(2);
                    draws += 1;
                }
                let est = shadow_mean_parity(&rep, &BitVec::from_u64(y, n), &x).unwrap();
                correct += ((est < 0.0) == f.edge_parity(x.as_index(), y as usize)) as usize;
                total += 1;
            }
        }
        let acc = correct as f64 / total as f64;
        let sigma = (sum_sq / draws as f64).sqrt();
        let z = (2.0 / 64.0) * (ell as f64).sqrt() / sigma;
        let predicted = statrs::distribution::Normal::standard().cdf(z);
        assert!(predicted < 0.62, "predicted {predicted}");
        assert!((acc - predicted).abs() <= 0.05, "sign accuracy {acc}, predicted {predicted}");
    }

    #[test]
    fn leaky_generator_is_exact() {
        let mut rng = SimRng::seed_from_u64(9);
        let s = Strategy::leaky();
        for n in 1..=3usize {
            for x in 1..1u64 << n {
                let x = BitVec::from_u64(x, n);
                let gen = train(&s, &x, &mut rng);
                for t in 0..1u64 << (1 << n) {
                    let f = BoolFunc::from_truth_table(BitVec::from_u64(t, 1 << n)).unwrap();
                    let rep = measure(&s, &f, 1, &mut rng).unwrap();
                    let d = gen.exact_distribution(&rep).unwrap();
                    assert!(tv_distance(&d, &concept_distribution(&f, &x).unwrap()).unwrap() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn leaky_generator_samples_in_relation() {
        let mut rng = SimRng::seed_from_u64(10);
        let x = BitVec::from_u64(0b1011, 4);
        let s = Strategy::leaky();
        let gen = train(&s, &x, &mut rng);
        let f = BoolFunc::random(4, &mut rng).unwrap();
        let rep = measure(&s, &f, 1, &mut rng).unwrap();
        for _ in 0..1000 {
            assert!(mf_generate(&gen, &rep, &mut rng).unwrap().satisfies(&f));
        }
    }

    #[test]
    fn shadow_generator_single_qubit_is_accurate() {
        let mut rng = SimRng::seed_from_u64(11);
        let x = BitVec::from_u64(1, 1);
        let s = Strategy::shadows(10_000, 2);
        let gen = train(&s, &x, &mut rng);
        for t in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let f = table(&t);
            let rep = measure(&s, &f, s.ell, &mut rng).unwrap();
            let tv = tv_distance(&gen.exact_distribution(&rep).unwrap(), &concept_distribution(&f, &x).unwrap()).unwrap();
            assert!(tv <= 0.05);
            for _ in 0..50 {
                let sample = mf_generate(&gen, &rep, &mut rng).unwrap();
                assert_eq!(sample.x, x);
            }
        }
    }

    #[test]
    fn generation_is_reproducible_and_checked() {
        let mut rng = SimRng::seed_from_u64(12);
        let x = BitVec::from_u64(0b101, 3);
        let s = Strategy::shadows(30, 2);
        let gen = train(&s, &x, &mut rng);
        let f = BoolFunc::random(3, &mut rng).unwrap();
        let rep = measure(&s, &f, 30, &mut rng).unwrap();
        let run = |seed| {
            let mut r = SimRng::seed_from_u64(seed);
            (0..30).map(|_| mf_generate(&gen, &rep, &mut r).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
        let other = measure(&Strategy::fourier(30), &f, 30, &mut rng).unwrap();
        assert!(matches!(mf_generate(&gen, &other, &mut rng), Err(Error::StrategyMismatch { .. })));
    }

    #[test]
    fn fourier_rule_exact_on_linear_functions() {
        let mut rng = SimRng::seed_from_u64(13);
        let n = 4;
        let x = BitVec::from_u64(0b0110, n);
        let s = Strategy::fourier(8);
        let gen = train(&s, &x, &mut rng);
        // f(y) = a . y is linear, so every edge parity is a . x.
        let a = 0b1100u64;
        let f = BoolFunc::from_truth_table(BitVec::from_bools(
            &(0..16u64).map(|y| dot_u64(a, y)).collect::<Vec<_>>(),
        ))
        .unwrap();
        let rep = measure(&s, &f, 8, &mut rng).unwrap();
        let d = gen.exact_distribution(&rep).unwrap();
        assert!(tv_distance(&d, &concept_distribution(&f, &x).unwrap()).unwrap() < 1e-12);
        let sample = concept_sample(&f, &x, &mut rng).unwrap();
        assert_eq!(sample.b, dot_u64(a, x.as_u64()));
    }

    #[test]
    fn rep_json_round_trip() {
        let mut rng = SimRng::seed_from_u64(14);
        let f = BoolFunc::random(3, &mut rng).unwrap();
        let rep = measure(&Strategy::shadows(3, 1), &f, 3, &mut rng).unwrap();
        let json = rep.to_json().unwrap();
        assert!(json.contains(r#""layout":"pauli3-v1""#));
        assert_eq!(ClassicalRep::from_json(&json).unwrap(), rep);
        let bad = json.replace(r#""m":27"#, r#""m":26"#);
        assert!(ClassicalRep::from_json(&bad).is_err());
    }
}
