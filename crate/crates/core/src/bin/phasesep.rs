//! Command-line runner. Exit codes: 0 ok, 1 a check failed, 2 bad config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasesep::runner::{check_manifest, parse_config, run, ExperimentKind, Overrides};
use phasesep::Error;

#[derive(Parser)]
#[command(name = "phasesep", version, about = "Learning hidden-matching measurements on phase states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Exact output distributions (default).
    #[arg(long, conflicts_with = "empirical")]
    exact: bool,
    /// Sampled output distributions.
    #[arg(long)]
    empirical: bool,
    /// Input lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Measurement strategies, comma separated (shadow, fourier, leaky).
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    /// Trials per arm for hm and distinguish.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the brute-force oracle suites.
    Verify(Common),
    /// Train the fully-quantum learner and check its output exactly.
    LearnFq(Common),
    /// Measure training data with a fixed strategy and train on the bits.
    LearnMf(Common),
    /// Fully-quantum vs measure-first TV across n.
    Separation(Common),
    /// Hidden Matching success rates.
    Hm {
        #[command(flatten)]
        common: Common,
        /// Protocols, comma separated: quantum, classical:c=K, reduction:<strategy>, random.
        #[arg(long, value_delimiter = ',')]
        protocols: Option<Vec<String>>,
    },
    /// PRF distinguisher built from a measure-first learner.
    Distinguish(Common),
    /// Check the digests in an output directory and print its manifest.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(kind: ExperimentKind, c: Common, protocols: Option<Vec<String>>) -> Result<bool, Error> {
    if let Some(t) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config { message: format!("thread pool: {e}"), line: None })?;
    }
    let overrides = Overrides {
        seed: c.seed,
        out: c.out,
        tv_mode: if c.empirical { Some("empirical".into()) } else if c.exact { Some("exact".into()) } else { None },
        n: c.n,
        strategies: c.strategies,
        protocols,
        trials: c.trials,
    };
    let cfg = parse_config(c.config.as_deref(), kind, &overrides)?;
    let outcome = run(&cfg)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    println!(
        "wrote {} files to {} ({:.1}s, config {})",
        outcome.manifest.files.len() + 1,
        cfg.out.display(),
        outcome.manifest.wall_clock_secs,
        &outcome.manifest.config_hash[..12]
    );
    if outcome.manifest.failed_trials > 0 {
        println!("{} trials failed to train and were counted as failures", outcome.manifest.failed_trials);
    }
    Ok(outcome.passed)
}

fn report(out: PathBuf) -> Result<bool, Error> {
    let (manifest, bad) = check_manifest(&out)?;
    println!("{} run, seed {}, version {}, config {}", manifest.experiment, manifest.seed, manifest.version, manifest.config_hash);
    for f in &manifest.files {
        let status = if bad.contains(&f.path) { "MODIFIED" } else { "ok" };
        println!("  {:<28} {:>9} bytes  {}  {status}", f.path, f.bytes, &f.sha256[..16]);
    }
    Ok(bad.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(c) => execute(ExperimentKind::Verify, c, None),
        Command::LearnFq(c) => execute(ExperimentKind::LearnFq, c, None),
        Command::LearnMf(c) => execute(ExperimentKind::LearnMf, c, None),
        Command::Separation(c) => execute(ExperimentKind::Separation, c, None),
        Command::Hm { common, protocols } => execute(ExperimentKind::Hm, common, protocols),
        Command::Distinguish(c) => execute(ExperimentKind::Distinguish, c, None),
        Command::Report { out } => report(out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config { .. } | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
