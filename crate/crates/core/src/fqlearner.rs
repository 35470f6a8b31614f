//! The fully-quantum learner: read `x` off the labels, then emit the
//! matching-basis measurement circuit for `x` as a replayable classical
//! description.
//!
//! The circuit fans CNOTs out from a pivot qubit `p` (the lowest set bit of
//! `x`) to every other set bit of `x`, then applies `H(p)`. The CNOT layer is
//! the linear map
//!
//! ```text
//! L(y)_p = y_p,    L(y)_j = y_j xor (x_j and y_p)   (j != p)
//! ```
//!
//! which sends both endpoints of the edge `{y, y xor x}` to labels that differ
//! only in bit `p`. The Hadamard then interferes the two amplitudes, so
//! outcome bit `p` is `f(y) xor f(y xor x)` and the remaining bits name the edge.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::{prepare_phase_state, sample_index, BoolFunc, ConceptSample, Distribution, Label, LabelMode};
use crate::concepts::{ExampleState, TrainingExample, EXACT_CAP};
use crate::error::{Error, Result};
use crate::gf2::{solve_system, BitVec, Gf2System, Solution};
use crate::qsim::{GateOp, StateVector};

pub const DECODE_VERSION: &str = "v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchingCircuit {
    n: usize,
    x: BitVec,
    pivot: usize,
    cnots: Vec<(usize, usize)>,
}

/// Builds the measurement circuit for the matching `{y, y xor x}`.
pub fn build_ux(x: &BitVec) -> Result<MatchingCircuit> {
    let pivot = x.first_one().ok_or(Error::DegenerateMatching)?;
    let cnots = x.iter_ones().filter(|&j| j != pivot).map(|j| (pivot, j)).collect();
    Ok(MatchingCircuit { n: x.len(), x: x.clone(), pivot, cnots })
}

impl MatchingCircuit {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x(&self) -> &BitVec {
        &self.x
    }

    pub fn pivot(&self) -> usize {
        self.pivot
    }

    pub fn cnots(&self) -> &[(usize, usize)] {
        &self.cnots
    }

    /// Gate count: the CNOT fan-out plus the final Hadamard.
    pub fn size(&self) -> usize {
        self.cnots.len() + 1
    }

    /// CNOTs in order, then `H(pivot)`.
    pub fn gates(&self) -> Vec<GateOp> {
        self.cnots
            .iter()
            .map(|&(control, target)| GateOp::Cnot { control, target })
            .chain(std::iter::once(GateOp::H(self.pivot)))
            .collect()
    }

    /// Action of the CNOT layer on a basis label. An involution.
    #[inline]
    pub fn linear_map(&self, y: usize) -> usize {
        if (y >> self.pivot) & 1 == 1 {
            y ^ (self.x.as_index() & !(1 << self.pivot))
        } else {
            y
        }
    }

    /// Splits a measurement outcome into `(y0, b)` where `y0` is the endpoint
    /// of the measured edge with bit `p` clear.
    #[inline]
    pub fn decode(&self, w: usize) -> (usize, bool) {
        let b = (w >> self.pivot) & 1 == 1;
        let u = w & !(1 << self.pivot);
        (self.linear_map(u), b)
    }

    fn check_f(&self, f: &BoolFunc) -> Result<()> {
        if f.n() != self.n {
            return Err(Error::dim(format!("circuit on {} qubits, function on {} bits", self.n, f.n())));
        }
        Ok(())
    }

    /// `U_x |psi_f>`.
    pub fn final_state(&self, f: &BoolFunc) -> Result<StateVector> {
        self.check_f(f)?;
        let mut s = prepare_phase_state(f)?;
        s.apply_all(&self.gates())?;
        Ok(s)
    }

    /// Exact output distribution of [`measure_concept`]: the Born-rule
    /// distribution of the final state pushed through the decoder, with the
    /// endpoint coin splitting each outcome across both ends of its edge.
    pub fn exact_distribution(&self, f: &BoolFunc) -> Result<Distribution> {
        if self.n > EXACT_CAP {
            return Err(Error::Capacity { what: "exact distribution", n: self.n, cap: EXACT_CAP });
        }
        let probs = self.final_state(f)?.outcome_distribution();
        let xi = self.x.as_u64();
        let mut d = Distribution::new(2 * self.n + 1);
        for (w, p) in probs.into_iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let (y0, b) = self.decode(w);
            d.add(sample_index(self.n, xi, y0 as u64, b), p / 2.0);
            d.add(sample_index(self.n, xi, y0 as u64 ^ xi, b), p / 2.0);
        }
        Ok(d)
    }
}

/// Runs the learned circuit on one copy of `|psi_f>` and decodes a sample `(x, y, b)`.
pub fn measure_concept<R: Rng + ?Sized>(circuit: &MatchingCircuit, f: &BoolFunc, rng: &mut R) -> Result<ConceptSample> {
    let s = circuit.final_state(f)?;
    let (y0, b) = circuit.decode(s.sample_index(rng));
    let y = if rng.random::<bool>() { y0 ^ circuit.x.as_index() } else { y0 };
    Ok(ConceptSample { x: circuit.x.clone(), y: BitVec::from_u64(y as u64, circuit.n), b })
}

/// Recovers `x` from labels of a single mode.
pub fn recover_x(labels: &[Label], mode: LabelMode) -> Result<BitVec> {
    let first = labels.first().ok_or_else(|| Error::CorruptData("no labels".into()))?;
    if let Some(bad) = labels.iter().find(|l| l.mode() != mode) {
        return Err(Error::CorruptData(format!("{} label in a {} dataset", bad.mode().as_str(), mode.as_str())));
    }
    match first {
        Label::Full(s0) => {
            if labels.iter().any(|l| matches!(l, Label::Full(s) if s.x != s0.x)) {
                return Err(Error::CorruptData("labels disagree on x".into()));
            }
            Ok(s0.x.clone())
        }
        Label::Parity { i, .. } => {
            let n = i.len();
            let mut sys = Gf2System::new(n);
            for l in labels {
                if let Label::Parity { i, parity } = l {
                    sys.push(i.clone(), *parity).map_err(|e| Error::CorruptData(e.to_string()))?;
                }
            }
            match solve_system(&sys)? {
                Solution::Unique(x) => Ok(x),
                Solution::Underdetermined { rank } => Err(Error::InsufficientData { rank, n }),
                Solution::Inconsistent => Err(Error::CorruptData("parity labels are inconsistent".into())),
            }
        }
    }
}

/// Learned classical description plus how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerOutput {
    #[serde(flatten)]
    pub circuit: MatchingCircuit,
    pub label_mode: LabelMode,
    pub examples_used: usize,
}

/// Labels are read for `x`; the quantum states in the data are never needed
/// because the circuit depends on `x` alone.
pub fn fully_quantum_learn(data: &[TrainingExample]) -> Result<LearnerOutput> {
    let first = data.first().ok_or_else(|| Error::CorruptData("empty training set".into()))?;
    let mode = first.label.mode();
    if data.iter().any(|ex| matches!(ex.state, ExampleState::Measured(_))) {
        return Err(Error::CorruptData("fully-quantum learner received measured examples".into()));
    }
    let labels: Vec<Label> = data.iter().map(|ex| ex.label.clone()).collect();
    let x = recover_x(&labels, mode)?;
    Ok(LearnerOutput { circuit: build_ux(&x)?, label_mode: mode, examples_used: data.len() })
}

#[derive(Serialize, Deserialize)]
struct CircuitWire {
    n: usize,
    x: String,
    pivot: usize,
    cnots: Vec<[usize; 2]>,
    decode: String,
}

impl Serialize for MatchingCircuit {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitWire {
            n: self.n,
            x: self.x.to_hex(),
            pivot: self.pivot,
            cnots: self.cnots.iter().map(|&(c, t)| [c, t]).collect(),
            decode: DECODE_VERSION.into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatchingCircuit {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = CircuitWire::deserialize(d)?;
        if w.decode != DECODE_VERSION {
            return Err(D::Error::custom(format!("unsupported decode rule `{}`", w.decode)));
        }
        let x = BitVec::from_hex(&w.x, w.n).map_err(D::Error::custom)?;
        let c = build_ux(&x).map_err(D::Error::custom)?;
        let cnots: Vec<(usize, usize)> = w.cnots.iter().map(|&[a, b]| (a, b)).collect();
        if c.pivot != w.pivot || c.cnots != cnots {
            return Err(D::Error::custom("circuit does not match its x"));
        }
        Ok(c)
    }
}
