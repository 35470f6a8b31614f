//! Statistical checks on the PRF family, then the learner-based
//! distinguisher against PRF and uniformly random oracles.

use phasesep::evaluation::StrategySpec;
use phasesep::prf::{battery, estimate_advantage, DistinguisherLearner, PrfSpec};
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let spec = PrfSpec::default();
    let mut rng = SimRng::seed_from_u64(31);
    let b = battery(&spec, 16, 20_000, &mut rng);
    println!(
        "{}: balance {:.4} (z {:+.2}), avalanche {:.4} (z {:+.2}), max corr z {:.2}, passes 4 sigma: {}",
        spec.tag(),
        b.balance_mean,
        b.balance_z,
        b.avalanche_rate,
        b.avalanche_z,
        b.max_correlation_z,
        b.passes(4.0)
    );

    let n = 6;
    let learner = DistinguisherLearner::prf(&spec);
    for name in ["leaky", "shadow"] {
        let strategy = StrategySpec { allow_leaky: true, ..StrategySpec::named(name)? }.resolve(n)?;
        let rep = estimate_advantage(&spec, n, &strategy, &learner, 300, &mut rng)?;
        println!(
            "{name:<6} p_prf {:.3}  p_rand {:.3}  gap {:+.3} [{:+.3}, {:+.3}]",
            rep.p_prf, rep.p_rand, rep.gap, rep.ci.gap.lo, rep.ci.gap.hi
        );
    }
    Ok(())
}
