//! Train the fully-quantum learner and compare its exact output with the target concept.

use phasesep::concepts::{concept_distribution, generate_training_data, tv_distance, BoolFunc, FSource, LabelMode};
use phasesep::fqlearner::fully_quantum_learn;
use phasesep::hmgame::random_nonzero;
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let mut rng = SimRng::seed_from_u64(11);
    for n in [2, 5, 8] {
        let x = random_nonzero(n, &mut rng);
        for mode in [LabelMode::FullX, LabelMode::Parity] {
            let count = if mode == LabelMode::FullX { 1 } else { n + 10 };
            let data = generate_training_data(&x, count, 10 * n * n, mode, &FSource::UniformRandom, &mut rng)?;
            let learned = fully_quantum_learn(&data)?;
            let f = BoolFunc::random(n, &mut rng)?;
            let tv = tv_distance(&learned.circuit.exact_distribution(&f)?, &concept_distribution(&f, &x)?)?;
            println!(
                "n={n} {:<7} examples={:<3} learned x={} (correct: {}), gates={}, TV on fresh f = {tv:.1e}",
                mode.as_str(),
                learned.examples_used,
                learned.circuit.x(),
                learned.circuit.x() == &x,
                learned.circuit.size()
            );
        }
    }
    // The learned description is plain data.
    let x = random_nonzero(3, &mut rng);
    let data = generate_training_data(&x, 1, 90, LabelMode::FullX, &FSource::UniformRandom, &mut rng)?;
    println!("{}", serde_json::to_string(&fully_quantum_learn(&data)?)?);
    Ok(())
}
