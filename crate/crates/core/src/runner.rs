//! Config parsing, experiment drivers and run manifests.
//!
//! A run is a pure function of `(config, seed, crate version)`: every output
//! file except `manifest.json` (which records wall-clock time) is byte
//! identical across repeated runs. Seeds split as
//! `derive_named(seed, experiment)`, then per `n` and per protocol.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::concepts::{concept_distribution, generate_training_data, tv_distance, write_jsonl, ExampleState, LabelMode, TrainingExample, EXACT_CAP};
use crate::error::{Error, Result};
use crate::evaluation::{
    parse_f_source, separation_experiment, EvalCriteria, LearnerConfigEcho, SeparationConfig, StrategySpec, TvMode,
};
use crate::fqlearner::fully_quantum_learn;
use crate::hmgame::{estimate_success_with_transcripts, random_nonzero, HmProtocol, SuccessEstimate};
use crate::mflearner::{measure, measure_dataset, measure_first_learn, LearnerConfig, Strategy};
use crate::plot::{bar_chart, line_chart, Axes, Series};
use crate::prf::{estimate_advantage, DistinguisherLearner, DistinguisherReport, PrfSpec};
use crate::qsim::DEFAULT_QUBIT_CAP;
use crate::stats::{derive_named, derive_seed, rng_from};
use crate::verify;

/// Largest `n` at which the full-table strategy may run without `allow_leaky`.
pub const LEAKY_FREE_MAX_N: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Verify,
    LearnFq,
    LearnMf,
    Separation,
    Hm,
    Distinguish,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Verify => "verify",
            ExperimentKind::LearnFq => "learn-fq",
            ExperimentKind::LearnMf => "learn-mf",
            ExperimentKind::Separation => "separation",
            ExperimentKind::Hm => "hm",
            ExperimentKind::Distinguish => "distinguish",
        }
    }

    fn default_n(&self) -> Vec<usize> {
        match self {
            ExperimentKind::Verify => vec![],
            ExperimentKind::LearnFq | ExperimentKind::LearnMf => vec![4],
            ExperimentKind::Separation | ExperimentKind::Hm => vec![2, 4, 6, 8],
            ExperimentKind::Distinguish => vec![8],
        }
    }

    fn max_n(&self) -> usize {
        match self {
            ExperimentKind::Hm | ExperimentKind::Distinguish => DEFAULT_QUBIT_CAP,
            _ => EXACT_CAP,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrials {
    f: Option<usize>,
    protocol: Option<usize>,
    xs_per_n: Option<usize>,
    hm: Option<usize>,
    distinguish: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCriteria {
    epsilon: Option<f64>,
    delta: Option<f64>,
    p_succ: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    n: Option<Vec<usize>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    ell: Option<usize>,
    m_budget: Option<usize>,
    strategies: Option<Vec<String>>,
    allow_leaky: Option<bool>,
    label_mode: Option<LabelMode>,
    train_count: Option<usize>,
    f_source: Option<String>,
    tv_mode: Option<String>,
    empirical_samples: Option<usize>,
    protocols: Option<Vec<String>>,
    transcripts: Option<bool>,
    trials: Option<RawTrials>,
    criteria: Option<RawCriteria>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Trials {
    pub f: usize,
    pub protocol: usize,
    pub xs_per_n: usize,
    pub hm: usize,
    pub distinguish: usize,
}

/// A validated experiment description with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: Vec<usize>,
    pub seed: u64,
    /// Not part of the echo: where a run writes must not change what it writes.
    #[serde(skip)]
    pub out: PathBuf,
    /// Copies per state; unset means `10 n^2`.
    pub ell: Option<usize>,
    /// Honest budget; unset means `3 n ell`.
    pub m_budget: Option<usize>,
    pub strategies: Vec<String>,
    pub allow_leaky: bool,
    pub label_mode: LabelMode,
    pub train_count: Option<usize>,
    pub f_source: String,
    pub tv_mode: String,
    pub empirical_samples: usize,
    pub protocols: Vec<String>,
    pub transcripts: bool,
    pub trials: Trials,
    pub criteria: EvalCriteria,
}

/// Values given on the command line; they replace file values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tv_mode: Option<String>,
    pub n: Option<Vec<usize>>,
    pub strategies: Option<Vec<String>>,
    pub protocols: Option<Vec<String>>,
    pub trials: Option<usize>,
}

fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn config_err(src: &str, key: &str, message: String) -> Error {
    Error::Config { message, line: line_of(src, key) }
}

/// Parses a TOML config (may be empty) for `kind` and applies overrides.
pub fn parse_config_str(src: &str, kind: ExperimentKind, ov: &Overrides) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| Error::Config {
        message: e.message().to_string(),
        line: e.span().map(|s| src[..s.start].matches('\n').count() + 1),
    })?;
    if let Some(k) = raw.experiment {
        if k != kind {
            return Err(config_err(
                src,
                "experiment",
                format!("config is for `{}` but the `{}` subcommand was run", k.as_str(), kind.as_str()),
            ));
        }
    }
    let trials = raw.trials.clone().unwrap_or_default();
    let crit = raw.criteria.clone().unwrap_or_default();
    let d = EvalCriteria::default();
    let criteria = EvalCriteria::new(
        crit.epsilon.unwrap_or(d.epsilon),
        crit.delta.unwrap_or(d.delta),
        crit.p_succ.unwrap_or(d.p_succ),
    )
    .map_err(|e| {
        let key = ["epsilon", "delta", "p_succ"].into_iter().find(|k| e.to_string().contains(k)).unwrap_or("criteria");
        config_err(src, key, e.to_string().trim_start_matches("config error: ").to_string())
    })?;
    let default_strategies: Vec<String> = match kind {
        ExperimentKind::Distinguish => vec!["leaky".into(), "shadow".into()],
        _ => vec!["shadow".into()],
    };
    let cfg = ExperimentConfig {
        experiment: kind,
        n: ov.n.clone().or(raw.n).unwrap_or_else(|| kind.default_n()),
        seed: ov.seed.or(raw.seed).unwrap_or(0),
        out: ov.out.clone().or(raw.out).unwrap_or_else(|| PathBuf::from("out").join(kind.as_str())),
        ell: raw.ell,
        m_budget: raw.m_budget,
        strategies: ov.strategies.clone().or(raw.strategies).unwrap_or(default_strategies),
        allow_leaky: raw.allow_leaky.unwrap_or(false),
        label_mode: raw.label_mode.unwrap_or(LabelMode::FullX),
        train_count: raw.train_count,
        f_source: raw.f_source.unwrap_or_else(|| "uniform".into()),
        tv_mode: ov.tv_mode.clone().or(raw.tv_mode).unwrap_or_else(|| "exact".into()),
        empirical_samples: raw.empirical_samples.unwrap_or(100_000),
        protocols: ov.protocols.clone().or(raw.protocols).unwrap_or_else(|| {
            ["quantum", "classical:c=8", "reduction:shadow", "random"].iter().map(|s| s.to_string()).collect()
        }),
        transcripts: raw.transcripts.unwrap_or(false),
        trials: Trials {
            f: trials.f.unwrap_or(20),
            protocol: trials.protocol.unwrap_or(5),
            xs_per_n: trials.xs_per_n.unwrap_or(3),
            hm: ov.trials.filter(|_| kind == ExperimentKind::Hm).or(trials.hm).unwrap_or(10_000),
            distinguish: ov.trials.filter(|_| kind == ExperimentKind::Distinguish).or(trials.distinguish).unwrap_or(1000),
        },
        criteria,
    };
    cfg.validate(src)?;
    Ok(cfg)
}

/// Reads `path` if given (an empty config otherwise) and parses it.
pub fn parse_config(path: Option<&Path>, kind: ExperimentKind, ov: &Overrides) -> Result<ExperimentConfig> {
    let src = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::Config { message: format!("cannot read {}: {e}", p.display()), line: None })?,
        None => String::new(),
    };
    parse_config_str(&src, kind, ov)
}

impl ExperimentConfig {
    fn validate(&self, src: &str) -> Result<()> {
        let max = self.experiment.max_n();
        if let Some(&bad) = self.n.iter().find(|&&n| n == 0 || n > max) {
            return Err(config_err(src, "n", format!("n = {bad} is outside 1..={max} for {}", self.experiment.as_str())));
        }
        if self.experiment != ExperimentKind::Verify && self.n.is_empty() {
            return Err(config_err(src, "n", "n must list at least one input length".into()));
        }
        let t = &self.trials;
        for (name, v) in [("f", t.f), ("protocol", t.protocol), ("xs_per_n", t.xs_per_n), ("hm", t.hm), ("distinguish", t.distinguish)] {
            if v == 0 {
                return Err(config_err(src, name, format!("trials.{name} must be >= 1")));
            }
        }
        if self.ell == Some(0) {
            return Err(config_err(src, "ell", "ell must be >= 1".into()));
        }
        parse_f_source(&self.f_source).map_err(|e| config_err(src, "f_source", e.to_string()))?;
        match self.tv_mode.as_str() {
            "exact" | "empirical" => {}
            other => return Err(config_err(src, "tv_mode", format!("tv_mode `{other}` is not exact or empirical"))),
        }
        let max_n = self.n.iter().copied().max().unwrap_or(0);
        let mut leaky_used = false;
        for s in &self.strategies {
            let spec = StrategySpec::named(s).map_err(|e| config_err(src, "strategies", e.to_string()))?;
            leaky_used |= spec.kind == "leaky"
                && matches!(self.experiment, ExperimentKind::LearnMf | ExperimentKind::Separation | ExperimentKind::Distinguish);
        }
        if self.experiment == ExperimentKind::Hm {
            for p in &self.protocols {
                let proto = parse_protocol(p, 1, self).map_err(|e| config_err(src, "protocols", e.to_string()))?;
                if let HmProtocol::Reduction { strategy, .. } = proto {
                    leaky_used |= strategy.kind == crate::mflearner::StrategyKind::LeakyFullTable;
                }
            }
        }
        if leaky_used && max_n > LEAKY_FREE_MAX_N && !self.allow_leaky {
            return Err(config_err(
                src,
                "strategies",
                format!(
                    "the leaky strategy records 2^n bits and exceeds the measurement budget at n = {max_n}; \
                     set allow_leaky = true to run it above n = {LEAKY_FREE_MAX_N}"
                ),
            ));
        }
        Ok(())
    }

    pub fn tv(&self) -> TvMode {
        if self.tv_mode == "empirical" {
            TvMode::Empirical(self.empirical_samples)
        } else {
            TvMode::Exact
        }
    }

    fn strategy_spec(&self, name: &str) -> Result<StrategySpec> {
        let mut s = StrategySpec::named(name)?;
        s.ell = self.ell;
        s.m_budget = self.m_budget;
        s.allow_leaky = s.kind == "leaky";
        s.salt = derive_named(self.seed, "shadow-salt");
        Ok(s)
    }

    fn learner(&self) -> Result<LearnerConfig> {
        Ok(LearnerConfig { label_mode: self.label_mode, train_count: self.train_count, source: parse_f_source(&self.f_source)? })
    }

    /// The echo written next to every run; also what the config hash covers.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_toml().as_bytes()))
    }
}

/// `quantum`, `classical:c=K`, `reduction:<strategy>` or `random`.
pub fn parse_protocol(s: &str, n: usize, cfg: &ExperimentConfig) -> Result<HmProtocol> {
    if s == "quantum" {
        return Ok(HmProtocol::Quantum);
    }
    if s == "random" {
        return Ok(HmProtocol::RandomGuess);
    }
    if let Some(c) = s.strip_prefix("classical:c=") {
        let c: usize = c.parse().map_err(|_| Error::Parse(format!("bad budget in `{s}`")))?;
        if c < 2 {
            return Err(Error::Parse(format!("`{s}`: classical budget must be >= 2")));
        }
        return Ok(HmProtocol::Classical { c });
    }
    if let Some(name) = s.strip_prefix("reduction:") {
        let strategy = cfg.strategy_spec(name)?.resolve(n.max(1))?;
        return Ok(HmProtocol::Reduction { strategy, learner: cfg.learner()? });
    }
    Err(Error::Parse(format!("unknown protocol `{s}` (quantum, classical:c=K, reduction:<strategy>, random)")))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<FileDigest>,
    /// Trials whose training failed; they are counted as failures in the results.
    pub failed_trials: usize,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn digest(&self, path: &str) -> Option<&str> {
        self.files.iter().find(|f| f.path == path).map(|f| f.sha256.as_str())
    }
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    /// False when a verification suite failed.
    pub passed: bool,
    /// One-line human summary per result.
    pub summary: Vec<String>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(FileDigest { path: name.into(), sha256: hex::encode(Sha256::digest(contents)), bytes: contents.len() });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

/// Runs the configured experiment and writes its artifacts plus `manifest.json` into `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let mut w = Writer::new(&cfg.out)?;
    w.write("config.toml", cfg.canonical_toml().as_bytes())?;
    let seed = derive_named(cfg.seed, cfg.experiment.as_str());
    let (passed, failed_trials, summary) = match cfg.experiment {
        ExperimentKind::Verify => run_verify(cfg, &mut w)?,
        ExperimentKind::LearnFq => run_learn_fq(cfg, seed, &mut w)?,
        ExperimentKind::LearnMf => run_learn_mf(cfg, seed, &mut w)?,
        ExperimentKind::Separation => run_separation(cfg, seed, &mut w)?,
        ExperimentKind::Hm => run_hm(cfg, seed, &mut w)?,
        ExperimentKind::Distinguish => run_distinguish(cfg, seed, &mut w)?,
    };
    let manifest = RunManifest {
        experiment: cfg.experiment.as_str().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        files: w.files.clone(),
        failed_trials,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    std::fs::write(cfg.out.join("manifest.json"), s)?;
    Ok(RunOutcome { manifest, passed, summary })
}

type Step = (bool, usize, Vec<String>);

fn run_verify(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Step> {
    let report = verify::run_all(cfg.seed);
    w.json("verify.json", &report)?;
    let lines = report
        .suites
        .iter()
        .map(|s| format!("{:<12} {:>8} checks  {}", s.name, s.checks, if s.passed() { "ok".to_string() } else { format!("{} FAILED", s.failed) }))
        .collect();
    Ok((report.passed(), 0, lines))
}

#[derive(Serialize)]
struct FqLearnRecord {
    n: usize,
    x: String,
    recovered: bool,
    learner: Option<crate::fqlearner::LearnerOutput>,
    error: Option<String>,
    max_tv: Option<f64>,
}

fn run_learn_fq(cfg: &ExperimentConfig, seed: u64, w: &mut Writer) -> Result<Step> {
    let learner = cfg.learner()?;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut failed = 0;
    for &n in &cfg.n {
        let mut rng = rng_from(derive_seed(seed, n as u64));
        let x = random_nonzero(n, &mut rng);
        let data = generate_training_data(&x, learner.count(n), 1, learner.label_mode, &learner.source, &mut rng)?;
        let mut buf = Vec::new();
        write_jsonl(&data, &mut buf)?;
        w.write(&format!("fq_train_n{n}.jsonl"), &buf)?;
        let rec = match fully_quantum_learn(&data) {
            Ok(out) => {
                let mut max_tv: f64 = 0.0;
                for _ in 0..cfg.trials.f {
                    let f = learner.source.draw(n, &mut rng)?;
                    let tv = tv_distance(&out.circuit.exact_distribution(&f)?, &concept_distribution(&f, &x)?)?;
                    max_tv = max_tv.max(tv);
                }
                lines.push(format!("n={n} x={x} recovered={} gates={} max_tv={max_tv:.3e}", out.circuit.x() == &x, out.circuit.size()));
                FqLearnRecord { n, x: x.to_string(), recovered: out.circuit.x() == &x, learner: Some(out), error: None, max_tv: Some(max_tv) }
            }
            Err(e) => {
                failed += 1;
                lines.push(format!("n={n} x={x} training failed: {e}"));
                FqLearnRecord { n, x: x.to_string(), recovered: false, learner: None, error: Some(e.to_string()), max_tv: None }
            }
        };
        records.push(rec);
    }
    w.json("fq_learners.json", &records)?;
    Ok((true, failed, lines))
}

#[derive(Serialize)]
struct MfLearnRecord {
    n: usize,
    strategy: String,
    ell: usize,
    m: usize,
    x: String,
    recovered_x: Option<String>,
    error: Option<String>,
    tv: Vec<f64>,
}

fn run_learn_mf(cfg: &ExperimentConfig, seed: u64, w: &mut Writer) -> Result<Step> {
    let learner = cfg.learner()?;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut failed = 0;
    for &n in &cfg.n {
        for name in &cfg.strategies {
            let strategy = cfg.strategy_spec(name)?.resolve(n)?;
            let mut rng = rng_from(derive_named(derive_seed(seed, n as u64), name));
            let x = random_nonzero(n, &mut rng);
            let data = generate_training_data(&x, learner.count(n), strategy.ell, learner.label_mode, &learner.source, &mut rng)?;
            let measured = measure_dataset(&strategy, &data, &mut rng)?;
            let wire: Vec<TrainingExample> = measured
                .iter()
                .map(|(rep, label)| TrainingExample { state: ExampleState::Measured(rep.clone()), label: label.clone() })
                .collect();
            let mut buf = Vec::new();
            write_jsonl(&wire, &mut buf)?;
            w.write(&format!("mf_train_n{n}_{name}.jsonl"), &buf)?;
            let mut rec = MfLearnRecord {
                n,
                strategy: strategy.id(),
                ell: strategy.ell,
                m: strategy.m(n),
                x: x.to_string(),
                recovered_x: None,
                error: None,
                tv: Vec::new(),
            };
            match measure_first_learn(&strategy, &measured) {
                Ok(gen) => {
                    rec.recovered_x = Some(gen.x().to_string());
                    for _ in 0..cfg.trials.f {
                        let f = learner.source.draw(n, &mut rng)?;
                        let rep = measure(&strategy, &f, strategy.ell, &mut rng)?;
                        rec.tv.push(tv_distance(&gen.exact_distribution(&rep)?, &concept_distribution(&f, &x)?)?);
                    }
                    let med = crate::stats::median(&rec.tv);
                    lines.push(format!("n={n} {} m={} median_tv={med:.4}", strategy.id(), rec.m));
                }
                Err(e) => {
                    failed += 1;
                    lines.push(format!("n={n} {} training failed: {e}", strategy.id()));
                    rec.error = Some(e.to_string());
                }
            }
            records.push(rec);
        }
    }
    w.json("mf_learners.json", &records)?;
    Ok((true, failed, lines))
}

fn run_separation(cfg: &ExperimentConfig, seed: u64, w: &mut Writer) -> Result<Step> {
    let sep = SeparationConfig {
        ns: cfg.n.clone(),
        include_fq: true,
        strategies: cfg.strategies.iter().map(|s| cfg.strategy_spec(s)).collect::<Result<_>>()?,
        learner: LearnerConfigEcho { label_mode: cfg.label_mode, train_count: cfg.train_count },
        f_source: cfg.f_source.clone(),
        f_trials: cfg.trials.f,
        protocol_trials: cfg.trials.protocol,
        xs_per_n: cfg.trials.xs_per_n,
        criteria: cfg.criteria,
        tv_mode: cfg.tv(),
        seed,
    };
    let result = separation_experiment(&sep)?;
    w.write("results.csv", result.csv().as_bytes())?;
    w.json("summary.json", &result)?;
    let mut by_arm: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in &result.summary {
        by_arm.entry(format!("{}:{}", s.protocol, s.strategy)).or_default().push((s.n as f64, s.median_tv));
    }
    let series: Vec<Series> = by_arm.into_iter().map(|(name, points)| Series { name, points }).collect();
    let svg = line_chart(
        &Axes { title: "Median exact TV to the target concept", x_label: "n", y_label: "median TV", log2_x: false, y_range: Some((0.0, 0.5)) },
        &series,
    );
    w.write("tv_vs_n.svg", svg.as_bytes())?;
    let failed = result.summary.iter().map(|s| s.failed_trainings).sum();
    let lines = result
        .summary
        .iter()
        .map(|s| {
            format!(
                "n={:<2} {:<3} {:<9} ell={:<5} m={:<6} median_tv={:.4} delta_hat={:.3} p_hat={:.2} verdict={}",
                s.n, s.protocol, s.strategy, s.ell, s.m, s.median_tv, s.delta_hat, s.p_hat, s.verdict
            )
        })
        .collect();
    Ok((true, failed, lines))
}

fn run_hm(cfg: &ExperimentConfig, seed: u64, w: &mut Writer) -> Result<Step> {
    let mut estimates: Vec<SuccessEstimate> = Vec::new();
    let mut transcripts = String::new();
    for &n in &cfg.n {
        let n_seed = derive_seed(seed, n as u64);
        for p in &cfg.protocols {
            let proto = parse_protocol(p, n, cfg)?;
            let mut rng = rng_from(derive_named(n_seed, p));
            let (est, tr) = estimate_success_with_transcripts(&proto, n, cfg.trials.hm, cfg.transcripts, &mut rng)?;
            for t in tr {
                transcripts.push_str(&serde_json::to_string(&t)?);
                transcripts.push('\n');
            }
            estimates.push(est);
        }
    }
    // Wide table: one success column per protocol.
    let mut wide = String::from("n");
    for p in &cfg.protocols {
        let _ = write!(wide, ",{p}");
    }
    wide.push('\n');
    for (i, &n) in cfg.n.iter().enumerate() {
        let _ = write!(wide, "{n}");
        for j in 0..cfg.protocols.len() {
            let _ = write!(wide, ",{:.6}", estimates[i * cfg.protocols.len() + j].rate);
        }
        wide.push('\n');
    }
    w.write("hm.csv", wide.as_bytes())?;
    let mut long = String::from("n,protocol,cost_bits,trials,successes,rate,ci_lo,ci_hi\n");
    for e in &estimates {
        let _ = writeln!(long, "{},{},{},{},{},{:.6},{:.6},{:.6}", e.n, e.protocol, e.cost_bits, e.trials, e.successes, e.rate, e.ci.lo, e.ci.hi);
    }
    w.write("hm_long.csv", long.as_bytes())?;
    if cfg.transcripts {
        w.write("transcripts.jsonl", transcripts.as_bytes())?;
    }
    let mut by_proto: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for e in estimates.iter().filter(|e| e.cost_bits > 0) {
        by_proto.entry(e.protocol.clone()).or_default().push((e.cost_bits as f64, e.rate));
    }
    let series: Vec<Series> = by_proto.into_iter().map(|(name, points)| Series { name, points }).collect();
    let svg = line_chart(
        &Axes { title: "Hidden Matching success vs bits sent", x_label: "bits sent", y_label: "success rate", log2_x: true, y_range: Some((0.4, 1.0)) },
        &series,
    );
    w.write("hm_success_vs_bits.svg", svg.as_bytes())?;
    let lines = estimates
        .iter()
        .map(|e| format!("n={:<2} {:<18} bits={:<7} rate={:.4} [{:.4}, {:.4}]", e.n, e.protocol, e.cost_bits, e.rate, e.ci.lo, e.ci.hi))
        .collect();
    Ok((true, 0, lines))
}

#[derive(Serialize)]
struct FlaggedReport {
    #[serde(flatten)]
    report: DistinguisherReport,
    /// Set when the gap interval excludes 0: a reproducible gap is a PRF defect.
    prf_defect_flag: bool,
}

fn run_distinguish(cfg: &ExperimentConfig, seed: u64, w: &mut Writer) -> Result<Step> {
    let spec = PrfSpec::default();
    let learner = DistinguisherLearner::MeasureFirst(LearnerConfig {
        label_mode: cfg.label_mode,
        train_count: cfg.train_count,
        source: crate::concepts::FSource::PrfKeys(spec.clone()),
    });
    let mut reports = Vec::new();
    for &n in &cfg.n {
        for name in &cfg.strategies {
            let strategy: Strategy = cfg.strategy_spec(name)?.resolve(n)?;
            let mut rng = rng_from(derive_named(derive_seed(seed, n as u64), name));
            let report = estimate_advantage(&spec, n, &strategy, &learner, cfg.trials.distinguish, &mut rng)?;
            reports.push(FlaggedReport { prf_defect_flag: !report.gap_consistent_with_zero(), report });
        }
    }
    w.json("distinguish.json", &reports)?;
    let categories: Vec<String> =
        reports.iter().map(|r| format!("{}@n={}", r.report.strategy.split(':').next().unwrap_or(""), r.report.n)).collect();
    let series = vec![
        Series { name: "p_prf".into(), points: reports.iter().map(|r| (0.0, r.report.p_prf)).collect() },
        Series { name: "p_rand".into(), points: reports.iter().map(|r| (0.0, r.report.p_rand)).collect() },
    ];
    let svg = bar_chart(
        &Axes { title: "Distinguisher acceptance probability", x_label: "strategy", y_label: "Pr[A = 1]", log2_x: false, y_range: Some((0.0, 1.0)) },
        &categories,
        &series,
    );
    w.write("distinguisher.svg", svg.as_bytes())?;
    let lines = reports
        .iter()
        .map(|r| {
            let c = &r.report.ci.gap;
            format!(
                "n={} {} p_prf={:.4} p_rand={:.4} gap={:+.4} ci=[{:+.4}, {:+.4}]{}",
                r.report.n,
                r.report.strategy,
                r.report.p_prf,
                r.report.p_rand,
                r.report.gap,
                c.lo,
                c.hi,
                if r.prf_defect_flag { "  FLAG: gap excludes 0" } else { "" }
            )
        })
        .collect();
    Ok((true, 0, lines))
}

/// Recomputes the digest of every file listed in `dir/manifest.json`.
/// Returns the manifest and the paths whose contents no longer match.
pub fn check_manifest(dir: &Path) -> Result<(RunManifest, Vec<String>)> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let mut bad = Vec::new();
    for f in &manifest.files {
        match std::fs::read(dir.join(&f.path)) {
            Ok(bytes) if hex::encode(Sha256::digest(&bytes)) == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok((manifest, bad))
}
