//! Measure-first learning with classical shadows, Fourier sampling, and the
//! (budget-breaking) full truth table, scored against the target concept.

use phasesep::concepts::{concept_distribution, tv_distance, BoolFunc};
use phasesep::hmgame::random_nonzero;
use phasesep::mflearner::{default_ell, measure, train_measure_first, LearnerConfig, Strategy};
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let mut rng = SimRng::seed_from_u64(5);
    for n in [2, 4, 6] {
        let ell = default_ell(n);
        let x = random_nonzero(n, &mut rng);
        for strategy in [Strategy::shadows(ell, 17), Strategy::fourier(ell), Strategy::leaky()] {
            let gen = train_measure_first(&strategy, &LearnerConfig::default(), &x, &mut rng)?;
            let mut tvs = Vec::new();
            for _ in 0..20 {
                let f = BoolFunc::random(n, &mut rng)?;
                let rep = measure(&strategy, &f, strategy.ell, &mut rng)?;
                tvs.push(tv_distance(&gen.exact_distribution(&rep)?, &concept_distribution(&f, &x)?)?);
            }
            tvs.sort_by(f64::total_cmp);
            println!(
                "n={n} {:<8} m={:>5} bits (budget {:>4}, honest {}): median TV {:.3}",
                strategy.kind.short_name(),
                strategy.m(n),
                strategy.budget(n),
                strategy.is_honest(n),
                tvs[tvs.len() / 2]
            );
        }
    }
    Ok(())
}
