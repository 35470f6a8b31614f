//! Learnability verdicts and the head-to-head separation experiment.
//!
//! A protocol is `(eps, delta, p_succ)`-learnable for `pi_x` if, with
//! probability at least `p_succ` over training, at least a `delta` fraction
//! of functions `f` satisfy `TV(generator(f), pi_x(f)) <= 1 - eps`. Both
//! probabilities are estimated by sampling: `delta` over fresh `f` per trained
//! generator, `p_succ` as the fraction of independent training runs whose
//! `delta` estimate clears the bar.

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::concepts::{
    concept_distribution, generate_training_data, tv_distance, BoolFunc, ConceptSample, Distribution, FSource,
    EXACT_CAP,
};
use crate::error::{Error, Result};
use crate::fqlearner::{fully_quantum_learn, measure_concept, MatchingCircuit};
use crate::gf2::BitVec;
use crate::hmgame::random_nonzero;
use crate::mflearner::{
    default_ell, measure, mf_generate, train_measure_first, ClassicalRep, LearnerConfig, MfGenerator, Strategy,
    StrategyKind,
};
use crate::stats::{derive_named, derive_seed, median, quantile, rng_from, wilson_interval, Interval};

/// A sampler for `(x, y, b)` bound to one target function.
pub trait Generator {
    fn n(&self) -> usize;
    fn sample(&self, rng: &mut dyn RngCore) -> Result<ConceptSample>;
    /// The exact output distribution, or [`Error::NoExactMode`].
    fn exact(&self) -> Result<Distribution>;
}

/// The trained fully-quantum generator applied to `|psi_f>`.
pub struct FqGenerator<'a> {
    pub circuit: &'a MatchingCircuit,
    pub f: &'a BoolFunc,
}

impl Generator for FqGenerator<'_> {
    fn n(&self) -> usize {
        self.circuit.n()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<ConceptSample> {
        measure_concept(self.circuit, self.f, rng)
    }

    fn exact(&self) -> Result<Distribution> {
        self.circuit.exact_distribution(self.f)
    }
}

/// A measure-first generator with its input representation fixed.
pub struct ConditionedMf<'a> {
    pub gen: &'a MfGenerator,
    pub rep: &'a ClassicalRep,
}

impl Generator for ConditionedMf<'_> {
    fn n(&self) -> usize {
        self.gen.x().len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<ConceptSample> {
        mf_generate(self.gen, self.rep, rng)
    }

    fn exact(&self) -> Result<Distribution> {
        self.gen.exact_distribution(self.rep)
    }
}

/// A measure-first generator that measures fresh copies of `|psi_f>` per sample.
pub struct FreshMf<'a> {
    pub gen: &'a MfGenerator,
    pub strategy: &'a Strategy,
    pub f: &'a BoolFunc,
}

impl Generator for FreshMf<'_> {
    fn n(&self) -> usize {
        self.gen.x().len()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Result<ConceptSample> {
        let rep = measure(self.strategy, self.f, self.strategy.ell, rng)?;
        mf_generate(self.gen, &rep, rng)
    }

    fn exact(&self) -> Result<Distribution> {
        Err(Error::NoExactMode)
    }
}

/// Always emits the same sample.
pub struct ConstantGenerator(pub ConceptSample);

impl Generator for ConstantGenerator {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn sample(&self, _rng: &mut dyn RngCore) -> Result<ConceptSample> {
        Ok(self.0.clone())
    }

    fn exact(&self) -> Result<Distribution> {
        Ok(Distribution::point_mass(2 * self.n() + 1, self.0.index()))
    }
}

pub fn exact_generator_distribution(gen: &dyn Generator) -> Result<Distribution> {
    if gen.n() > EXACT_CAP {
        return Err(Error::Capacity { what: "exact distribution", n: gen.n(), cap: EXACT_CAP });
    }
    gen.exact()
}

/// Frequency distribution over `trials` samples, and the statistical TV
/// bound `sqrt(2^(2n+1) / trials)` to quote alongside it.
pub fn empirical_distribution(gen: &dyn Generator, trials: usize, rng: &mut dyn RngCore) -> Result<(Distribution, f64)> {
    if trials == 0 {
        return Err(Error::config("empirical_distribution needs trials >= 1"));
    }
    let n = gen.n();
    let mut d = Distribution::new(2 * n + 1);
    let w = 1.0 / trials as f64;
    for _ in 0..trials {
        d.add(gen.sample(rng)?.index(), w);
    }
    Ok((d, (2f64.powi(2 * n as i32 + 1) / trials as f64).sqrt()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalCriteria {
    pub epsilon: f64,
    pub delta: f64,
    pub p_succ: f64,
}

impl EvalCriteria {
    pub fn new(epsilon: f64, delta: f64, p_succ: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("delta", delta), ("p_succ", p_succ)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(EvalCriteria { epsilon, delta, p_succ })
    }

    /// `TV <= 1 - eps`.
    pub fn is_good(&self, tv: f64) -> bool {
        tv <= 1.0 - self.epsilon
    }

    /// `eps * delta > 7/8`: the regime where the communication lower bound applies.
    pub fn above_hm_threshold(&self) -> bool {
        self.epsilon * self.delta > 7.0 / 8.0
    }

    /// `eps * delta * p_succ > c`.
    pub fn above_prf_threshold(&self, c: f64) -> bool {
        self.epsilon * self.delta * self.p_succ > c
    }
}

impl Default for EvalCriteria {
    fn default() -> Self {
        EvalCriteria { epsilon: 0.95, delta: 0.9, p_succ: 0.9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolKind {
    FullyQuantum,
    MeasureFirst(Strategy),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub learner: LearnerConfig,
}

impl ProtocolSpec {
    pub fn fully_quantum() -> Self {
        ProtocolSpec { kind: ProtocolKind::FullyQuantum, learner: LearnerConfig::default() }
    }

    pub fn measure_first(strategy: Strategy) -> Self {
        ProtocolSpec { kind: ProtocolKind::MeasureFirst(strategy), learner: LearnerConfig::default() }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ProtocolKind::FullyQuantum => "fq",
            ProtocolKind::MeasureFirst(_) => "mf",
        }
    }

    pub fn strategy_name(&self) -> &'static str {
        match &self.kind {
            ProtocolKind::FullyQuantum => "matching",
            ProtocolKind::MeasureFirst(s) => s.kind.short_name(),
        }
    }

    /// Copies per training state (the fully-quantum learner uses one).
    pub fn ell(&self) -> usize {
        match &self.kind {
            ProtocolKind::FullyQuantum => 1,
            ProtocolKind::MeasureFirst(s) => s.ell,
        }
    }

    /// Bits per classical representation; 0 for the fully-quantum learner.
    pub fn m(&self, n: usize) -> usize {
        match &self.kind {
            ProtocolKind::FullyQuantum => 0,
            ProtocolKind::MeasureFirst(s) => s.m(n),
        }
    }
}

/// How the per-`f` distance is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvMode {
    Exact,
    /// Frequency estimate from this many generator samples.
    Empirical(usize),
}

enum Trained {
    Fq(MatchingCircuit),
    Mf(MfGenerator, Strategy),
}

fn train<R: Rng + ?Sized>(protocol: &ProtocolSpec, x: &BitVec, rng: &mut R) -> Result<Trained> {
    match &protocol.kind {
        ProtocolKind::FullyQuantum => {
            let cfg = &protocol.learner;
            let data = generate_training_data(x, cfg.count(x.len()), 1, cfg.label_mode, &cfg.source, rng)?;
            Ok(Trained::Fq(fully_quantum_learn(&data)?.circuit))
        }
        ProtocolKind::MeasureFirst(s) => Ok(Trained::Mf(train_measure_first(s, &protocol.learner, x, rng)?, s.clone())),
    }
}

fn tv_for<R: Rng + ?Sized>(trained: &Trained, f: &BoolFunc, x: &BitVec, mode: TvMode, rng: &mut R) -> Result<f64> {
    let truth = concept_distribution(f, x)?;
    let mut rng = rng;
    let rng: &mut dyn RngCore = &mut rng;
    let estimate = |g: &dyn Generator, rng: &mut dyn RngCore| -> Result<Distribution> {
        match mode {
            TvMode::Exact => exact_generator_distribution(g),
            TvMode::Empirical(k) => Ok(empirical_distribution(g, k, rng)?.0),
        }
    };
    let d = match trained {
        Trained::Fq(circuit) => estimate(&FqGenerator { circuit, f }, rng)?,
        Trained::Mf(gen, strategy) => {
            let rep = measure(strategy, f, strategy.ell, rng)?;
            estimate(&ConditionedMf { gen, rep: &rep }, rng)?
        }
    };
    tv_distance(&d, &truth)
}

/// One independent training run and its per-`f` results.
#[derive(Clone, Debug, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// `false` if training failed; the trial then counts as unsuccessful.
    pub trained: bool,
    pub tv: Vec<f64>,
    pub good: Vec<bool>,
    pub delta_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub protocol: String,
    pub strategy: String,
    pub n: usize,
    pub x: String,
    pub f_source: String,
    pub criteria: EvalCriteria,
    pub tv_mode: TvMode,
    pub f_trials: usize,
    pub protocol_trials: usize,
    pub trials: Vec<TrialResult>,
    /// Good fraction pooled over every `(trial, f)` pair.
    pub delta_hat: f64,
    pub delta_ci: Interval,
    /// Fraction of training runs with `delta_hat >= delta`.
    pub p_hat: f64,
    pub p_ci: Interval,
    pub verdict: bool,
    pub failed_trainings: usize,
}

impl EvalReport {
    /// Every per-`f` distance, trial-major.
    pub fn all_tv(&self) -> Vec<f64> {
        self.trials.iter().flat_map(|t| t.tv.iter().copied()).collect()
    }
}

/// Estimates `(delta, p_succ)` for `protocol` on the concept `pi_x`.
///
/// Training run `t` uses `derive_seed(base, t)`; within it, training and
/// each `f` draw from that stream in a fixed order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_learnability<R: Rng + ?Sized>(
    protocol: &ProtocolSpec,
    x: &BitVec,
    f_source: &FSource,
    criteria: EvalCriteria,
    f_trials: usize,
    protocol_trials: usize,
    tv_mode: TvMode,
    rng: &mut R,
) -> Result<EvalReport> {
    if f_trials == 0 || protocol_trials == 0 {
        return Err(Error::config("evaluation needs f_trials >= 1 and protocol_trials >= 1"));
    }
    if x.is_zero() {
        return Err(Error::DegenerateMatching);
    }
    let n = x.len();
    let base: u64 = rng.random();
    let trials = (0..protocol_trials)
        .into_par_iter()
        .map(|t| -> Result<TrialResult> {
            let seed = derive_seed(base, t as u64);
            let mut r = rng_from(seed);
            let trained = match train(protocol, x, &mut r) {
                Ok(tr) => Some(tr),
                Err(Error::InsufficientData { .. } | Error::CorruptData(_)) => None,
                Err(e) => return Err(e),
            };
            let mut tv = Vec::with_capacity(f_trials);
            if let Some(trained) = &trained {
                let f_base: u64 = r.random();
                for j in 0..f_trials {
                    let mut rf = rng_from(derive_seed(f_base, j as u64));
                    let f = f_source.draw(n, &mut rf)?;
                    tv.push(tv_for(trained, &f, x, tv_mode, &mut rf)?);
                }
            } else {
                // A failed training run outputs nothing usable: maximal distance.
                tv.resize(f_trials, 1.0);
            }
            let good: Vec<bool> = tv.iter().map(|&d| criteria.is_good(d)).collect();
            let delta_hat = good.iter().filter(|&&g| g).count() as f64 / f_trials as f64;
            Ok(TrialResult { trial: t, seed, trained: trained.is_some(), tv, good, delta_hat })
        })
        .collect::<Result<Vec<_>>>()?;
    let good_total: usize = trials.iter().map(|t| t.good.iter().filter(|&&g| g).count()).sum();
    let succ = trials.iter().filter(|t| t.delta_hat >= criteria.delta).count();
    let p_hat = succ as f64 / protocol_trials as f64;
    Ok(EvalReport {
        protocol: protocol.name().into(),
        strategy: protocol.strategy_name().into(),
        n,
        x: x.to_hex(),
        f_source: f_source.name().into(),
        criteria,
        tv_mode,
        f_trials,
        protocol_trials,
        delta_hat: good_total as f64 / (f_trials * protocol_trials) as f64,
        delta_ci: wilson_interval(good_total, f_trials * protocol_trials),
        p_hat,
        p_ci: wilson_interval(succ, protocol_trials),
        verdict: p_hat >= criteria.p_succ,
        failed_trainings: trials.iter().filter(|t| !t.trained).count(),
        trials,
    })
}

/// A strategy whose copy count may scale with `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategySpec {
    pub kind: String,
    /// Copies per state; `None` means `10 n^2`.
    pub ell: Option<usize>,
    pub m_budget: Option<usize>,
    pub allow_leaky: bool,
    /// Basis-schedule salt for the shadow strategy.
    pub salt: u64,
}

impl StrategySpec {
    pub fn named(kind: &str) -> Result<Self> {
        kind.parse::<StrategyKind>()?;
        Ok(StrategySpec { kind: kind.into(), ell: None, m_budget: None, allow_leaky: false, salt: 0 })
    }

    pub fn resolve(&self, n: usize) -> Result<Strategy> {
        let kind = match self.kind.parse::<StrategyKind>()? {
            StrategyKind::RandomPauliShadows { .. } => StrategyKind::RandomPauliShadows { seed: self.salt },
            k => k,
        };
        if kind == StrategyKind::LeakyFullTable {
            return Ok(Strategy { allow_leaky: self.allow_leaky, m_budget: self.m_budget, ..Strategy::leaky() });
        }
        Ok(Strategy { kind, ell: self.ell.unwrap_or_else(|| default_ell(n)), m_budget: self.m_budget, allow_leaky: false })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationConfig {
    pub ns: Vec<usize>,
    pub include_fq: bool,
    pub strategies: Vec<StrategySpec>,
    pub learner: LearnerConfigEcho,
    pub f_source: String,
    pub f_trials: usize,
    pub protocol_trials: usize,
    /// Hidden strings sampled per `n`.
    pub xs_per_n: usize,
    pub criteria: EvalCriteria,
    pub tv_mode: TvMode,
    pub seed: u64,
}

/// Serializable echo of the learner settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LearnerConfigEcho {
    pub label_mode: crate::concepts::LabelMode,
    pub train_count: Option<usize>,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            ns: vec![2, 4, 6, 8],
            include_fq: true,
            strategies: vec![StrategySpec::named("shadow").expect("known strategy")],
            learner: LearnerConfigEcho { label_mode: crate::concepts::LabelMode::FullX, train_count: None },
            f_source: "uniform".into(),
            f_trials: 20,
            protocol_trials: 5,
            xs_per_n: 3,
            criteria: EvalCriteria::default(),
            tv_mode: TvMode::Exact,
            seed: 0,
        }
    }
}

pub fn parse_f_source(name: &str) -> Result<FSource> {
    match name {
        "uniform" => Ok(FSource::UniformRandom),
        "prf" => Ok(FSource::PrfKeys(crate::prf::PrfSpec::default())),
        other => Err(Error::Parse(format!("unknown f_source `{other}` (expected uniform or prf)"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationRow {
    pub n: usize,
    pub protocol: String,
    pub strategy: String,
    pub ell: usize,
    pub m: usize,
    pub f_source: String,
    pub trial: usize,
    pub tv_exact_or_emp: f64,
    pub indicator: bool,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "n,protocol,strategy,ell,m,f_source,trial,tv_exact_or_emp,indicator,seed";

impl SeparationRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.12},{},{}",
            self.n,
            self.protocol,
            self.strategy,
            self.ell,
            self.m,
            self.f_source,
            self.trial,
            self.tv_exact_or_emp,
            self.indicator as u8,
            self.seed
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationSummary {
    pub n: usize,
    pub protocol: String,
    pub strategy: String,
    pub ell: usize,
    pub m: usize,
    pub xs: Vec<String>,
    pub median_tv: f64,
    pub q25_tv: f64,
    pub q75_tv: f64,
    pub max_tv: f64,
    pub delta_hat: f64,
    pub p_hat: f64,
    pub verdict: bool,
    pub failed_trainings: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationResult {
    pub config: SeparationConfig,
    pub summary: Vec<SeparationSummary>,
    #[serde(skip)]
    pub rows: Vec<SeparationRow>,
}

impl SeparationResult {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn summary_for(&self, n: usize, strategy: &str) -> Option<&SeparationSummary> {
        self.summary.iter().find(|s| s.n == n && s.strategy == strategy)
    }
}

/// Runs every protocol at every `n` on the same hidden strings.
///
/// Seeds: `x` values come from `derive_named(derive_seed(seed, n), "x")`;
/// protocol `p` evaluates from `derive_named(derive_seed(seed, n), name_p)`.
pub fn separation_experiment(cfg: &SeparationConfig) -> Result<SeparationResult> {
    if cfg.ns.is_empty() || cfg.ns.iter().any(|&n| n == 0 || n > EXACT_CAP) {
        return Err(Error::config(format!("n values must lie in 1..={EXACT_CAP}")));
    }
    if cfg.xs_per_n == 0 {
        return Err(Error::config("xs_per_n must be >= 1"));
    }
    let f_source = parse_f_source(&cfg.f_source)?;
    let learner = LearnerConfig {
        label_mode: cfg.learner.label_mode,
        train_count: cfg.learner.train_count,
        source: f_source.clone(),
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &n in &cfg.ns {
        let n_seed = derive_seed(cfg.seed, n as u64);
        let mut x_rng = rng_from(derive_named(n_seed, "x"));
        let xs: Vec<BitVec> = (0..cfg.xs_per_n).map(|_| random_nonzero(n, &mut x_rng)).collect();
        let mut protocols = Vec::new();
        if cfg.include_fq {
            protocols.push(ProtocolSpec { kind: ProtocolKind::FullyQuantum, learner: learner.clone() });
        }
        for s in &cfg.strategies {
            protocols.push(ProtocolSpec { kind: ProtocolKind::MeasureFirst(s.resolve(n)?), learner: learner.clone() });
        }
        for protocol in &protocols {
            let label = format!("{}:{}", protocol.name(), protocol.strategy_name());
            let mut rng = rng_from(derive_named(n_seed, &label));
            let mut all_tv = Vec::new();
            let (mut good, mut succ, mut runs, mut failed) = (0usize, 0usize, 0usize, 0usize);
            let mut trial = 0;
            for x in &xs {
                let rep = evaluate_learnability(
                    protocol,
                    x,
                    &f_source,
                    cfg.criteria,
                    cfg.f_trials,
                    cfg.protocol_trials,
                    cfg.tv_mode,
                    &mut rng,
                )?;
                for t in &rep.trials {
                    for (&tv, &g) in t.tv.iter().zip(&t.good) {
                        rows.push(SeparationRow {
                            n,
                            protocol: protocol.name().into(),
                            strategy: protocol.strategy_name().into(),
                            ell: protocol.ell(),
                            m: protocol.m(n),
                            f_source: f_source.name().into(),
                            trial,
                            tv_exact_or_emp: tv,
                            indicator: g,
                            seed: t.seed,
                        });
                        trial += 1;
                        all_tv.push(tv);
                        good += g as usize;
                    }
                    succ += (t.delta_hat >= cfg.criteria.delta) as usize;
                    runs += 1;
                }
                failed += rep.failed_trainings;
            }
            let p_hat = succ as f64 / runs as f64;
            summary.push(SeparationSummary {
                n,
                protocol: protocol.name().into(),
                strategy: protocol.strategy_name().into(),
                ell: protocol.ell(),
                m: protocol.m(n),
                xs: xs.iter().map(|x| x.to_string()).collect(),
                median_tv: median(&all_tv),
                q25_tv: quantile(&all_tv, 0.25),
                q75_tv: quantile(&all_tv, 0.75),
                max_tv: all_tv.iter().copied().fold(0.0, f64::max),
                delta_hat: good as f64 / all_tv.len() as f64,
                p_hat,
                verdict: p_hat >= cfg.criteria.p_succ,
                failed_trainings: failed,
            });
        }
    }
    Ok(SeparationResult { config: cfg.clone(), summary, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fqlearner::build_ux;
    use crate::stats::SimRng;
    use rand::SeedableRng;

    #[test]
    fn criteria_direction() {
        let c = EvalCriteria::new(0.999, 1.0, 1.0).unwrap();
        assert!(c.is_good(0.0));
        for eps in [0.01, 0.5, 1.0] {
            assert!(!EvalCriteria::new(eps, 0.5, 0.5).unwrap().is_good(1.0));
        }
        assert!(EvalCriteria::new(1.2, 0.5, 0.5).is_err());
        assert!(EvalCriteria::new(0.5, -0.1, 0.5).is_err());
        assert!(EvalCriteria::new(0.95, 0.95, 1.0).unwrap().above_hm_threshold());
        assert!(!EvalCriteria::new(0.9, 0.9, 1.0).unwrap().above_hm_threshold());
        assert!(EvalCriteria::new(1.0, 1.0, 0.9).unwrap().above_prf_threshold(0.88));
    }

    #[test]
    fn fq_generator_exact_matches_concept() {
        let mut rng = SimRng::seed_from_u64(1);
        for n in 1..=6 {
            let x = random_nonzero(n, &mut rng);
            let f = BoolFunc::random(n, &mut rng).unwrap();
            let c = build_ux(&x).unwrap();
            let d = exact_generator_distribution(&FqGenerator { circuit: &c, f: &f }).unwrap();
            assert!(tv_distance(&d, &concept_distribution(&f, &x).unwrap()).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn constant_generator_is_point_mass() {
        let s = ConceptSample { x: BitVec::from_u64(1, 2), y: BitVec::zeros(2), b: false };
        let d = exact_generator_distribution(&ConstantGenerator(s.clone())).unwrap();
        assert_eq!(d.prob(s.index()), 1.0);
        let (e, _) = empirical_distribution(&ConstantGenerator(s.clone()), 1, &mut SimRng::seed_from_u64(0)).unwrap();
        assert_eq!(e.prob(s.index()), 1.0);
    }

    #[test]
    fn empirical_converges() {
        let mut rng = SimRng::seed_from_u64(2);
        let x = BitVec::from_u64(3, 2);
        let f = BoolFunc::from_table(&[true, false, false, false]).unwrap();
        let c = build_ux(&x).unwrap();
        let g = FqGenerator { circuit: &c, f: &f };
        let (e, bound) = empirical_distribution(&g, 1_000_000, &mut rng).unwrap();
        let tv = tv_distance(&e, &g.exact().unwrap()).unwrap();
        assert!(tv <= 0.01, "{tv}");
        assert!(tv <= bound);
        let (a, _) = empirical_distribution(&g, 100, &mut SimRng::seed_from_u64(3)).unwrap();
        let (b, _) = empirical_distribution(&g, 100, &mut SimRng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_mf_has_no_exact_mode() {
        let mut rng = SimRng::seed_from_u64(4);
        let x = BitVec::from_u64(1, 2);
        let s = Strategy::leaky();
        let gen = train_measure_first(&s, &LearnerConfig::default(), &x, &mut rng).unwrap();
        let f = BoolFunc::random(2, &mut rng).unwrap();
        let g = FreshMf { gen: &gen, strategy: &s, f: &f };
        assert!(matches!(exact_generator_distribution(&g), Err(Error::NoExactMode)));
        let (e, _) = empirical_distribution(&g, 2000, &mut rng).unwrap();
        assert!(tv_distance(&e, &concept_distribution(&f, &x).unwrap()).unwrap() < 0.1);
    }

    #[test]
    fn fq_protocol_passes_every_criterion() {
        let mut rng = SimRng::seed_from_u64(5);
        let x = random_nonzero(5, &mut rng);
        let crit = EvalCriteria::new(0.999, 1.0, 1.0).unwrap();
        let rep = evaluate_learnability(&ProtocolSpec::fully_quantum(), &x, &FSource::UniformRandom, crit, 10, 3, TvMode::Exact, &mut rng)
            .unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.delta_hat, 1.0);
        assert!(rep.all_tv().iter().all(|&t| t <= 1e-9));
        assert_eq!(rep.all_tv().len(), 30);
    }

    #[test]
    fn leaky_protocol_passes() {
        let mut rng = SimRng::seed_from_u64(6);
        for n in [3, 8] {
            let x = random_nonzero(n, &mut rng);
            let rep = evaluate_learnability(
                &ProtocolSpec::measure_first(Strategy::leaky()),
                &x,
                &FSource::UniformRandom,
                EvalCriteria::default(),
                5,
                2,
                TvMode::Exact,
                &mut rng,
            )
            .unwrap();
            assert!(rep.verdict && rep.delta_hat == 1.0);
        }
    }

    #[test]
    fn shadow_protocol_fails_at_n8() {
        let mut rng = SimRng::seed_from_u64(7);
        let x = random_nonzero(8, &mut rng);
        let rep = evaluate_learnability(
            &ProtocolSpec::measure_first(Strategy::shadows(640, 1)),
            &x,
            &FSource::UniformRandom,
            EvalCriteria::new(0.95, 0.9, 0.5).unwrap(),
            5,
            2,
            TvMode::Exact,
            &mut rng,
        )
        .unwrap();
        assert!(!rep.verdict);
    }

    #[test]
    fn summary_statistics_ignore_trial_order() {
        let mut rng = SimRng::seed_from_u64(8);
        let x = random_nonzero(4, &mut rng);
        let rep = evaluate_learnability(
            &ProtocolSpec::measure_first(Strategy::shadows(160, 2)),
            &x,
            &FSource::UniformRandom,
            EvalCriteria::new(0.5, 0.5, 0.5).unwrap(),
            6,
            4,
            TvMode::Exact,
            &mut rng,
        )
        .unwrap();
        let mut tv = rep.all_tv();
        let before = (median(&tv), tv.iter().filter(|&&t| t <= 0.5).count());
        tv.reverse();
        tv.rotate_left(5);
        assert_eq!(before, (median(&tv), tv.iter().filter(|&&t| t <= 0.5).count()));
    }

    #[test]
    fn exact_and_empirical_agree_within_bound() {
        let mut rng = SimRng::seed_from_u64(9);
        let x = random_nonzero(3, &mut rng);
        let s = Strategy::shadows(90, 3);
        let gen = train_measure_first(&s, &LearnerConfig::default(), &x, &mut rng).unwrap();
        let f = BoolFunc::random(3, &mut rng).unwrap();
        let rep = measure(&s, &f, 90, &mut rng).unwrap();
        let g = ConditionedMf { gen: &gen, rep: &rep };
        let (e, bound) = empirical_distribution(&g, 40_000, &mut rng).unwrap();
        assert!(tv_distance(&e, &g.exact().unwrap()).unwrap() <= bound);
    }

    #[test]
    fn separation_small_is_deterministic() {
        let cfg = SeparationConfig { ns: vec![2, 3], f_trials: 4, protocol_trials: 2, seed: 11, ..Default::default() };
        let a = separation_experiment(&cfg).unwrap();
        let b = separation_experiment(&cfg).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert!(a.csv().starts_with(CSV_HEADER));
        // n values x protocols x hidden strings x training runs x functions.
        assert_eq!(a.rows.len(), 2 * 2 * cfg.xs_per_n * 2 * 4);
        assert!(a.summary_for(2, "matching").unwrap().max_tv <= 1e-9);
    }
}
