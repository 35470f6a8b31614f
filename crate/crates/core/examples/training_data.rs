//! Draw concept samples and write a small training set as JSON lines.

use phasesep::concepts::{concept_sample, generate_training_data, read_jsonl, write_jsonl, BoolFunc, FSource, LabelMode};
use phasesep::hmgame::random_nonzero;
use phasesep::prf::PrfSpec;
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let mut rng = SimRng::seed_from_u64(3);
    let n = 4;
    let x = random_nonzero(n, &mut rng);
    let f = BoolFunc::random(n, &mut rng)?;
    println!("x = {x}");
    for _ in 0..4 {
        let s = concept_sample(&f, &x, &mut rng)?;
        println!("sample y = {}, b = {}, satisfies R_f(x): {}", s.y, s.b as u8, s.satisfies(&f));
    }

    let data = generate_training_data(&x, 3, 10 * n * n, LabelMode::Parity, &FSource::UniformRandom, &mut rng)?;
    let mut buf = Vec::new();
    write_jsonl(&data, &mut buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    let back = read_jsonl(buf.as_slice(), &PrfSpec::default())?;
    println!("round trip equal: {}", back == data);
    Ok(())
}
