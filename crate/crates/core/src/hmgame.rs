//! The Hidden Matching one-way communication game.
//!
//! Alice holds `f: {0,1}^n -> {0,1}`, Bob holds a nonzero `x`. Bob must
//! output an edge `{y, y xor x}` of the matching `M_x` together with
//! `f(y) xor f(y xor x)`. Inputs are drawn from `mu`: `f` uniform, `x`
//! uniform over the `2^n - 1` nonzero strings (`M_0` is not a matching).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::concepts::{BoolFunc, FSource};
use crate::error::{Error, Result};
use crate::fqlearner::{build_ux, measure_concept};
use crate::gf2::BitVec;
use crate::mflearner::{measure, mf_generate, train_measure_first, ClassicalRep, LearnerConfig, MfGenerator, Strategy};
use crate::stats::{derive_seed, rng_from, wilson_interval, Interval};

/// The perfect matching `{{y, y xor x}}` on `{0,1}^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    x: BitVec,
}

impl Matching {
    pub fn new(x: BitVec) -> Result<Self> {
        if x.is_zero() {
            return Err(Error::DegenerateMatching);
        }
        Ok(Matching { x })
    }

    pub fn x(&self) -> &BitVec {
        &self.x
    }

    /// The `2^(n-1)` edges as `(y, y xor x)` with `y < y xor x`.
    pub fn edges(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let x = self.x.as_u64();
        (0..1u64 << self.x.len()).filter(move |&y| y < y ^ x).map(move |y| (y, y ^ x))
    }

    pub fn contains(&self, a: u64, b: u64) -> bool {
        a ^ b == self.x.as_u64()
    }
}

/// Draws `x` uniformly from the nonzero `n`-bit strings.
pub fn random_nonzero<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BitVec {
    assert!((1..64).contains(&n));
    BitVec::from_u64(rng.random_range(1..1u64 << n), n)
}

#[derive(Clone, Debug)]
pub struct HmInstance {
    pub f: BoolFunc,
    pub x: BitVec,
}

impl HmInstance {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let x = random_nonzero(n, rng);
        Ok(HmInstance { f: BoolFunc::random(n, rng)?, x })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_correct(&self, answer: &HmAnswer) -> bool {
        let x = self.x.as_u64();
        answer.lo ^ answer.hi == x && answer.parity == self.f.edge_parity(x as usize, answer.lo as usize)
    }
}

/// An answer canonicalized as `(min, max, parity)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HmAnswer {
    pub lo: u64,
    pub hi: u64,
    pub parity: bool,
}

impl HmAnswer {
    pub fn new(a: u64, b: u64, parity: bool) -> Self {
        HmAnswer { lo: a.min(b), hi: a.max(b), parity }
    }
}

fn check_instance(inst: &HmInstance) -> Result<()> {
    if inst.x.is_zero() {
        return Err(Error::DegenerateMatching);
    }
    if inst.f.n() != inst.x.len() {
        return Err(Error::dim(format!("f on {} bits, x of {} bits", inst.f.n(), inst.x.len())));
    }
    Ok(())
}

/// One copy of `|psi_f>` from Alice; Bob measures it with the matching circuit for `x`.
pub fn hm_quantum<R: Rng + ?Sized>(inst: &HmInstance, rng: &mut R) -> Result<HmAnswer> {
    check_instance(inst)?;
    let circuit = build_ux(&inst.x)?;
    let s = measure_concept(&circuit, &inst.f, rng)?;
    let y = s.y.as_u64();
    Ok(HmAnswer::new(y, y ^ inst.x.as_u64(), s.b))
}

/// Alice's message in the classical baseline: `min(c, 2^n)` distinct indices
/// with their function values, each entry `n + 1` bits.
pub fn classical_message<R: Rng + ?Sized>(c: usize, f: &BoolFunc, rng: &mut R) -> Vec<(u64, bool)> {
    let n = f.n();
    let count = c.min(1 << n);
    rand::seq::index::sample(rng, 1 << n, count)
        .into_iter()
        .map(|y| (y as u64, f.query(y)))
        .collect()
}

/// Bob's side of the classical baseline: answer a fully revealed edge if one
/// exists, otherwise guess a random edge and parity.
pub fn classical_answer<R: Rng + ?Sized>(x: &BitVec, message: &[(u64, bool)], rng: &mut R) -> HmAnswer {
    let xi = x.as_u64();
    let known: std::collections::HashMap<u64, bool> = message.iter().copied().collect();
    for (&y, &fy) in &known {
        if let Some(&fz) = known.get(&(y ^ xi)) {
            return HmAnswer::new(y, y ^ xi, fy ^ fz);
        }
    }
    let y = rng.random::<u64>() & ((1u64 << x.len()) - 1);
    HmAnswer::new(y, y ^ xi, rng.random())
}

pub fn hm_classical_baseline<R: Rng + ?Sized>(c: usize, inst: &HmInstance, rng: &mut R) -> Result<HmAnswer> {
    check_instance(inst)?;
    if c < 2 {
        return Err(Error::config("classical baseline needs c >= 2"));
    }
    let msg = classical_message(c, &inst.f, rng);
    Ok(classical_answer(&inst.x, &msg, rng))
}

fn encode_message(n: usize, msg: &[(u64, bool)]) -> BitVec {
    let mut bits = BitVec::zeros(msg.len() * (n + 1));
    for (k, &(y, v)) in msg.iter().enumerate() {
        for j in 0..n {
            bits.set(k * (n + 1) + j, (y >> j) & 1 == 1);
        }
        bits.set(k * (n + 1) + n, v);
    }
    bits
}

/// Bob's preparation: build `T_x^M` from his own random functions and train.
pub fn bob_train<R: Rng + ?Sized>(strategy: &Strategy, learner: &LearnerConfig, x: &BitVec, rng: &mut R) -> Result<MfGenerator> {
    train_measure_first(strategy, learner, x, rng)
}

/// Alice's message: the strategy applied to her state, exactly `m` bits.
pub fn alice_message<R: Rng + ?Sized>(strategy: &Strategy, f: &BoolFunc, rng: &mut R) -> Result<ClassicalRep> {
    measure(strategy, f, strategy.ell, rng)
}

/// Bob's answer from his trained generator and the received bits. Sees neither `f` nor Alice's randomness.
pub fn bob_answer<R: Rng + ?Sized>(gen: &MfGenerator, x: &BitVec, payload: &ClassicalRep, rng: &mut R) -> Result<HmAnswer> {
    debug_assert_eq!(gen.x(), x);
    let s = mf_generate(gen, payload, rng)?;
    let y = s.y.as_u64();
    Ok(HmAnswer::new(y, y ^ x.as_u64(), s.b))
}

#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub answer: HmAnswer,
    pub payload: ClassicalRep,
    /// Bits sent from Alice to Bob.
    pub cost: usize,
}

/// Turns a measure-first protocol into an HM protocol.
pub fn reduce_measure_first<R: Rng + ?Sized>(
    strategy: &Strategy,
    learner: &LearnerConfig,
    inst: &HmInstance,
    rng: &mut R,
) -> Result<ReductionOutcome> {
    check_instance(inst)?;
    let n = inst.n();
    if !strategy.is_honest(n) && !strategy.allow_leaky {
        return Err(Error::Budget(format!("strategy {} is over budget at n = {n}", strategy.id())));
    }
    let (bob_seed, alice_seed, answer_seed): (u64, u64, u64) = (rng.random(), rng.random(), rng.random());
    let gen = bob_train(strategy, learner, &inst.x, &mut rng_from(bob_seed))?;
    let payload = alice_message(strategy, &inst.f, &mut rng_from(alice_seed))?;
    let answer = bob_answer(&gen, &inst.x, &payload, &mut rng_from(answer_seed))?;
    Ok(ReductionOutcome { answer, cost: payload.m, payload })
}

#[derive(Clone, Debug, PartialEq)]
pub enum HmProtocol {
    Quantum,
    Classical { c: usize },
    Reduction { strategy: Strategy, learner: LearnerConfig },
    /// Random edge, fair-coin parity.
    RandomGuess,
}

impl HmProtocol {
    pub fn name(&self) -> String {
        match self {
            HmProtocol::Quantum => "quantum".into(),
            HmProtocol::Classical { c } => format!("classical:c={c}"),
            HmProtocol::Reduction { strategy, .. } => format!("reduction:{}", strategy.kind.short_name()),
            HmProtocol::RandomGuess => "random".into(),
        }
    }

    /// Bits Alice sends at input length `n`.
    pub fn cost_bits(&self, n: usize) -> usize {
        match self {
            HmProtocol::Quantum => n,
            HmProtocol::Classical { c } => (*c).min(1 << n) * (n + 1),
            HmProtocol::Reduction { strategy, .. } => strategy.m(n),
            HmProtocol::RandomGuess => 0,
        }
    }
}

/// One line of a game transcript.
#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub n: usize,
    pub x: String,
    pub f_digest: String,
    pub sent_bits: String,
    pub answer: HmAnswer,
    pub correct: bool,
}

fn f_digest(f: &BoolFunc) -> String {
    let table = f.truth_table().map(|t| t.to_bytes()).unwrap_or_default();
    hex::encode(&Sha256::digest(&table)[..8])
}

fn play<R: Rng + ?Sized>(protocol: &HmProtocol, inst: &HmInstance, rng: &mut R) -> Result<(HmAnswer, BitVec)> {
    let n = inst.n();
    Ok(match protocol {
        HmProtocol::Quantum => (hm_quantum(inst, rng)?, BitVec::zeros(0)),
        HmProtocol::Classical { c } => {
            check_instance(inst)?;
            let msg = classical_message(*c, &inst.f, rng);
            (classical_answer(&inst.x, &msg, rng), encode_message(n, &msg))
        }
        HmProtocol::Reduction { strategy, learner } => {
            let out = reduce_measure_first(strategy, learner, inst, rng)?;
            (out.answer, out.payload.bits)
        }
        HmProtocol::RandomGuess => {
            let y = rng.random::<u64>() & ((1u64 << n) - 1);
            (HmAnswer::new(y, y ^ inst.x.as_u64(), rng.random()), BitVec::zeros(0))
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuccessEstimate {
    pub protocol: String,
    pub n: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci: Interval,
    pub cost_bits: usize,
}

/// Monte Carlo success rate under `mu`. Instance `t` uses `derive_seed(base, t)`.
pub fn estimate_success<R: Rng + ?Sized>(
    protocol: &HmProtocol,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> Result<SuccessEstimate> {
    Ok(estimate_success_with_transcripts(protocol, n, trials, false, rng)?.0)
}

pub fn estimate_success_with_transcripts<R: Rng + ?Sized>(
    protocol: &HmProtocol,
    n: usize,
    trials: usize,
    keep_transcripts: bool,
    rng: &mut R,
) -> Result<(SuccessEstimate, Vec<Transcript>)> {
    if trials == 0 {
        return Err(Error::config("estimate_success needs trials >= 1"));
    }
    let base: u64 = rng.random();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(bool, Option<Transcript>)> {
            let mut r = rng_from(derive_seed(base, t as u64));
            let inst = HmInstance::sample(n, &mut r)?;
            let (answer, sent) = play(protocol, &inst, &mut r)?;
            let correct = inst.is_correct(&answer);
            let transcript = keep_transcripts.then(|| Transcript {
                n,
                x: inst.x.to_hex(),
                f_digest: f_digest(&inst.f),
                sent_bits: sent.to_hex(),
                answer,
                correct,
            });
            Ok((correct, transcript))
        })
        .collect::<Result<Vec<_>>>()?;
    let successes = outcomes.iter().filter(|o| o.0).count();
    let transcripts: Vec<Transcript> = outcomes.into_iter().filter_map(|o| o.1).collect();
    let estimate = SuccessEstimate {
        protocol: protocol.name(),
        n,
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        ci: wilson_interval(successes, trials),
        cost_bits: protocol.cost_bits(n),
    };
    Ok((estimate, transcripts))
}

/// Convenience for the `FSource` a reduction's Bob uses: uniform functions, as under `mu`.
pub fn default_reduction_learner() -> LearnerConfig {
    LearnerConfig { source: FSource::UniformRandom, ..LearnerConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SimRng;
    use rand::SeedableRng;
    use std::collections::HashSet;

    #[test]
    fn matchings_are_perfect_and_edge_disjoint() {
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..=10);
            if n == 1 {
                continue;
            }
            let a = Matching::new(random_nonzero(n, &mut rng)).unwrap();
            let b = loop {
                let x = random_nonzero(n, &mut rng);
                if &x != a.x() {
                    break Matching::new(x).unwrap();
                }
            };
            let ea: HashSet<(u64, u64)> = a.edges().collect();
            assert_eq!(ea.len(), 1 << (n - 1));
            let covered: HashSet<u64> = ea.iter().flat_map(|&(p, q)| [p, q]).collect();
            assert_eq!(covered.len(), 1 << n);
            assert!(b.edges().all(|e| !ea.contains(&e)));
        }
        assert!(Matching::new(BitVec::zeros(3)).is_err());
    }

    #[test]
    fn quantum_protocol_single_edge() {
        let inst = HmInstance { f: BoolFunc::from_table(&[false, true]).unwrap(), x: BitVec::from_u64(1, 1) };
        let mut rng = SimRng::seed_from_u64(2);
        for _ in 0..20 {
            assert_eq!(hm_quantum(&inst, &mut rng).unwrap(), HmAnswer { lo: 0, hi: 1, parity: true });
        }
    }

    #[test]
    fn quantum_protocol_never_fails() {
        let mut rng = SimRng::seed_from_u64(3);
        for n in 1..=8 {
            let est = estimate_success(&HmProtocol::Quantum, n, 1000, &mut rng).unwrap();
            assert_eq!(est.successes, est.trials);
        }
    }

    #[test]
    fn classical_full_table_always_wins() {
        let mut rng = SimRng::seed_from_u64(4);
        for n in 1..=4 {
            let est = estimate_success(&HmProtocol::Classical { c: 2 << n }, n, 500, &mut rng).unwrap();
            assert_eq!(est.rate, 1.0);
        }
    }

    #[test]
    fn classical_two_entries_is_a_coin() {
        let mut rng = SimRng::seed_from_u64(5);
        let est = estimate_success(&HmProtocol::Classical { c: 2 }, 12, 4000, &mut rng).unwrap();
        assert!(est.ci.contains(0.5) || (est.rate - 0.5).abs() < 0.03, "{est:?}");
        assert!(hm_classical_baseline(1, &HmInstance::sample(3, &mut rng).unwrap(), &mut rng).is_err());
    }

    #[test]
    fn classical_success_grows_with_budget() {
        let mut rng = SimRng::seed_from_u64(6);
        let n = 8;
        let rates: Vec<f64> = [2usize, 8, 16, 32, 64, 128, 256]
            .iter()
            .map(|&c| estimate_success(&HmProtocol::Classical { c }, n, 3000, &mut rng).unwrap().rate)
            .collect();
        for w in rates.windows(2) {
            // Nondecreasing up to Monte Carlo noise.
            assert!(w[1] >= w[0] - 0.03, "{rates:?}");
        }
        assert!(rates[rates.len() - 1] == 1.0);
    }

    #[test]
    fn random_guess_is_half() {
        let mut rng = SimRng::seed_from_u64(7);
        let est = estimate_success(&HmProtocol::RandomGuess, 6, 4000, &mut rng).unwrap();
        assert!(est.ci.contains(0.5), "{est:?}");
        let again = estimate_success(&HmProtocol::RandomGuess, 6, 4000, &mut SimRng::seed_from_u64(7)).unwrap();
        let first = estimate_success(&HmProtocol::RandomGuess, 6, 4000, &mut SimRng::seed_from_u64(7)).unwrap();
        assert_eq!(again.rate, first.rate);
    }

    #[test]
    fn leaky_reduction_always_wins_at_exponential_cost() {
        let mut rng = SimRng::seed_from_u64(8);
        let proto = HmProtocol::Reduction { strategy: Strategy::leaky(), learner: default_reduction_learner() };
        for n in [2, 5, 8] {
            let est = estimate_success(&proto, n, 200, &mut rng).unwrap();
            assert_eq!(est.rate, 1.0);
            assert_eq!(est.cost_bits, 1 << n);
        }
    }

    #[test]
    fn reduction_payload_is_the_rep() {
        let mut rng = SimRng::seed_from_u64(9);
        let strategy = Strategy::shadows(12, 3);
        let inst = HmInstance::sample(4, &mut rng).unwrap();
        let (est, transcripts) = estimate_success_with_transcripts(
            &HmProtocol::Reduction { strategy: strategy.clone(), learner: default_reduction_learner() },
            4,
            3,
            true,
            &mut rng,
        )
        .unwrap();
        assert_eq!(transcripts.len(), 3);
        assert_eq!(est.cost_bits, 3 * 4 * 12);
        let out = reduce_measure_first(&strategy, &default_reduction_learner(), &inst, &mut SimRng::seed_from_u64(10)).unwrap();
        assert_eq!(out.cost, out.payload.bits.len());
        // Replaying Alice's seed reproduces exactly the bytes Bob received.
        let mut r = SimRng::seed_from_u64(10);
        let (_, alice_seed): (u64, u64) = (r.random(), r.random());
        let direct = alice_message(&strategy, &inst.f, &mut rng_from(alice_seed)).unwrap();
        assert_eq!(direct.bits.to_bytes(), out.payload.bits.to_bytes());
    }

    #[test]
    fn bob_only_sees_the_payload() {
        let mut rng = SimRng::seed_from_u64(11);
        let strategy = Strategy::shadows(40, 1);
        let x = random_nonzero(5, &mut rng);
        let gen = bob_train(&strategy, &default_reduction_learner(), &x, &mut rng).unwrap();
        let f = BoolFunc::random(5, &mut rng).unwrap();
        let payload = alice_message(&strategy, &f, &mut rng).unwrap();
        let a = bob_answer(&gen, &x, &payload, &mut SimRng::seed_from_u64(1)).unwrap();
        // A different f behind the same payload cannot change Bob's answer.
        let _other = BoolFunc::random(5, &mut rng).unwrap();
        let b = bob_answer(&gen, &x, &payload, &mut SimRng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn over_budget_reduction_rejected() {
        let mut rng = SimRng::seed_from_u64(12);
        let inst = HmInstance::sample(8, &mut rng).unwrap();
        let strict = Strategy { allow_leaky: false, ..Strategy::leaky() };
        assert!(matches!(
            reduce_measure_first(&strict, &default_reduction_learner(), &inst, &mut rng),
            Err(Error::Budget(_))
        ));
    }
}
