//! The learner-based distinguisher `A^f`.
//!
//! Given point-query access to `f`, it samples `x`, trains a measure-first
//! learner on PRF-backed examples for `x`, prepares `|psi_f>` through the
//! phase oracle, measures it with the learner's strategy, generates one
//! sample and checks it against `R_f(x)` using two more oracle queries.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{sample_key, PrfSpec};
use crate::concepts::{BoolFunc, FSource};
use crate::error::{Error, Result};
use crate::hmgame::random_nonzero;
use crate::mflearner::{measure_state, mf_generate, train_measure_first, LearnerConfig, Strategy};
use crate::qsim::{GateOp, StateVector};
use crate::stats::{derive_seed, difference_interval, rng_from, wilson_interval, Interval};

/// What the distinguisher trains in step 3.
#[derive(Clone, Debug, PartialEq)]
pub enum DistinguisherLearner {
    /// The measure-first pipeline. Training functions are drawn from the
    /// config's source, which should be the PRF family being tested.
    MeasureFirst(LearnerConfig),
    /// Ignores the data and always outputs the same parity on a uniform `y`.
    ConstantParity(bool),
}

impl DistinguisherLearner {
    pub fn prf(spec: &PrfSpec) -> Self {
        DistinguisherLearner::MeasureFirst(LearnerConfig { source: FSource::PrfKeys(spec.clone()), ..LearnerConfig::default() })
    }
}

/// Which family the oracle is drawn from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleKind {
    Prf(PrfSpec),
    Uniform,
}

impl OracleKind {
    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<BoolFunc> {
        match self {
            OracleKind::Prf(spec) => BoolFunc::from_prf(spec.clone(), sample_key(spec, rng), n),
            OracleKind::Uniform => BoolFunc::random(n, rng),
        }
    }
}

fn oracle_state(oracle: &BoolFunc) -> Result<StateVector> {
    let n = oracle.n();
    let mut psi = StateVector::zero(n)?;
    for q in 0..n {
        psi.apply_mut(&GateOp::H(q))?;
    }
    psi.apply_mut(&GateOp::PhaseOracle(oracle.clone()))?;
    Ok(psi)
}

fn run_inner<R: Rng + ?Sized>(
    oracle: &BoolFunc,
    strategy: &Strategy,
    learner: &DistinguisherLearner,
    rng: &mut R,
) -> Result<bool> {
    let n = oracle.n();
    let x = random_nonzero(n, rng);
    let sample = match learner {
        DistinguisherLearner::MeasureFirst(cfg) => {
            let gen = train_measure_first(strategy, cfg, &x, rng)?;
            let psi = oracle_state(oracle)?;
            let rep = measure_state(strategy, &psi, strategy.ell, rng)?;
            mf_generate(&gen, &rep, rng)?
        }
        DistinguisherLearner::ConstantParity(b) => {
            let y = rng.random_range(0..1u64 << n);
            crate::concepts::ConceptSample { x: x.clone(), y: crate::gf2::BitVec::from_u64(y, n), b: *b }
        }
    };
    if sample.x != x {
        return Ok(false);
    }
    Ok(sample.b == oracle.edge_parity(x.as_index(), sample.y.as_index()))
}

/// One run of the distinguisher against `oracle`. A training failure counts as output 0.
pub fn distinguisher_run<R: Rng + ?Sized>(
    oracle: &BoolFunc,
    strategy: &Strategy,
    learner: &DistinguisherLearner,
    rng: &mut R,
) -> Result<bool> {
    match run_inner(oracle, strategy, learner, rng) {
        Ok(bit) => Ok(bit),
        Err(Error::InsufficientData { .. } | Error::CorruptData(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DistinguisherReport {
    pub spec_version: String,
    pub n: usize,
    pub strategy: String,
    pub trials: usize,
    pub p_prf: f64,
    pub p_rand: f64,
    pub gap: f64,
    pub ci: AdvantageIntervals,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdvantageIntervals {
    pub p_prf: Interval,
    pub p_rand: Interval,
    /// 95% interval for `p_prf - p_rand`.
    pub gap: Interval,
}

impl DistinguisherReport {
    /// Whether the observed gap is consistent with zero advantage.
    pub fn gap_consistent_with_zero(&self) -> bool {
        self.ci.gap.contains(0.0)
    }
}

fn arm<R: Rng + ?Sized>(
    kind: &OracleKind,
    n: usize,
    strategy: &Strategy,
    learner: &DistinguisherLearner,
    trials: usize,
    rng: &mut R,
) -> Result<usize> {
    let base: u64 = rng.random();
    let ones = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<usize> {
            let mut r = rng_from(derive_seed(base, t as u64));
            let oracle = kind.draw(n, &mut r)?;
            Ok(distinguisher_run(&oracle, strategy, learner, &mut r)? as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(ones)
}

/// Runs the distinguisher `trials` times against fresh PRF keys and `trials`
/// times against fresh uniform truth tables.
pub fn estimate_advantage<R: Rng + ?Sized>(
    spec: &PrfSpec,
    n: usize,
    strategy: &Strategy,
    learner: &DistinguisherLearner,
    trials: usize,
    rng: &mut R,
) -> Result<DistinguisherReport> {
    if trials == 0 {
        return Err(Error::config("estimate_advantage needs trials >= 1"));
    }
    let seed: u64 = rng.random();
    let prf = arm(&OracleKind::Prf(spec.clone()), n, strategy, learner, trials, &mut rng_from(derive_seed(seed, 0)))?;
    let rand = arm(&OracleKind::Uniform, n, strategy, learner, trials, &mut rng_from(derive_seed(seed, 1)))?;
    let (p_prf, p_rand) = (prf as f64 / trials as f64, rand as f64 / trials as f64);
    Ok(DistinguisherReport {
        spec_version: spec.tag(),
        n,
        strategy: strategy.id(),
        trials,
        p_prf,
        p_rand,
        gap: p_prf - p_rand,
        ci: AdvantageIntervals {
            p_prf: wilson_interval(prf, trials),
            p_rand: wilson_interval(rand, trials),
            gap: difference_interval(prf, trials, rand, trials),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SimRng;
    use rand::SeedableRng;

    #[test]
    fn oracle_state_matches_direct_preparation() {
        let mut rng = SimRng::seed_from_u64(1);
        let f = BoolFunc::random(5, &mut rng).unwrap();
        let a = oracle_state(&f).unwrap();
        let b = crate::concepts::prepare_phase_state(&f).unwrap();
        for (p, q) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn leaky_pipeline_always_accepts() {
        let spec = PrfSpec::default();
        let learner = DistinguisherLearner::prf(&spec);
        let mut rng = SimRng::seed_from_u64(2);
        for n in [2, 5, 8] {
            for kind in [OracleKind::Prf(spec.clone()), OracleKind::Uniform] {
                for _ in 0..20 {
                    let f = kind.draw(n, &mut rng).unwrap();
                    assert!(distinguisher_run(&f, &Strategy::leaky(), &learner, &mut rng).unwrap());
                }
            }
        }
    }

    #[test]
    fn constant_parity_accepts_half_the_time() {
        let mut rng = SimRng::seed_from_u64(3);
        let rep = estimate_advantage(
            &PrfSpec::default(),
            8,
            &Strategy::leaky(),
            &DistinguisherLearner::ConstantParity(true),
            3000,
            &mut rng,
        )
        .unwrap();
        assert!(rep.ci.p_prf.contains(0.5) && rep.ci.p_rand.contains(0.5), "{rep:?}");
    }

    #[test]
    fn fixed_seed_fixed_bit() {
        let spec = PrfSpec::default();
        let f = OracleKind::Prf(spec.clone()).draw(6, &mut SimRng::seed_from_u64(4)).unwrap();
        let s = Strategy::shadows(60, 9);
        let l = DistinguisherLearner::prf(&spec);
        let a = distinguisher_run(&f, &s, &l, &mut SimRng::seed_from_u64(5)).unwrap();
        let b = distinguisher_run(&f, &s, &l, &mut SimRng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let err = estimate_advantage(
            &PrfSpec::default(),
            4,
            &Strategy::leaky(),
            &DistinguisherLearner::ConstantParity(false),
            0,
            &mut SimRng::seed_from_u64(6),
        );
        assert!(matches!(err, Err(Error::Config { .. })));
    }

    #[test]
    fn leaky_report_has_no_gap() {
        let spec = PrfSpec::default();
        let rep = estimate_advantage(&spec, 6, &Strategy::leaky(), &DistinguisherLearner::prf(&spec), 100, &mut SimRng::seed_from_u64(7)).unwrap();
        assert_eq!((rep.p_prf, rep.p_rand, rep.gap), (1.0, 1.0, 0.0));
        let json = serde_json::to_value(&rep).unwrap();
        for key in ["spec_version", "n", "strategy", "trials", "p_prf", "p_rand", "gap", "ci"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
