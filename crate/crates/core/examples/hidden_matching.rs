//! Hidden Matching success rates for the quantum protocol, a classical
//! baseline, the measure-first reduction, and random guessing.

use phasesep::evaluation::StrategySpec;
use phasesep::hmgame::{default_reduction_learner, estimate_success, hm_quantum, HmInstance, HmProtocol, Matching};
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let mut rng = SimRng::seed_from_u64(21);
    let inst = HmInstance::sample(3, &mut rng)?;
    let m = Matching::new(inst.x.clone())?;
    println!("x = {}, matching {:?}", inst.x, m.edges().collect::<Vec<_>>());
    let ans = hm_quantum(&inst, &mut rng)?;
    println!("quantum answer {ans:?}, correct: {}", inst.is_correct(&ans));

    for n in [2, 4, 6] {
        let protocols = [
            HmProtocol::Quantum,
            HmProtocol::Classical { c: 4 },
            HmProtocol::Reduction { strategy: StrategySpec::named("shadow")?.resolve(n)?, learner: default_reduction_learner() },
            HmProtocol::RandomGuess,
        ];
        for p in &protocols {
            let est = estimate_success(p, n, 2000, &mut rng)?;
            println!(
                "n={n} {:<18} {:>6} bits  success {:.3} [{:.3}, {:.3}]",
                est.protocol, est.cost_bits, est.rate, est.ci.lo, est.ci.hi
            );
        }
    }
    Ok(())
}
