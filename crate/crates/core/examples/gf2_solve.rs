//! Recover a hidden string from random parity checks.

use phasesep::gf2::{dot, rank, solve_system, BitVec, Gf2System, Solution};
use phasesep::stats::SimRng;
use rand::SeedableRng;

fn main() -> phasesep::Result<()> {
    let mut rng = SimRng::seed_from_u64(7);
    let n = 12;
    let secret = BitVec::random(n, &mut rng);
    let mut sys = Gf2System::new(n);
    for k in 1..=n + 10 {
        let i = BitVec::random(n, &mut rng);
        let rhs = dot(&i, &secret)?;
        sys.push(i, rhs)?;
        let coeffs: Vec<BitVec> = sys.rows().iter().map(|r| r.0.clone()).collect();
        print!("{k:>2} rows, rank {:>2}: ", rank(&coeffs)?);
        match solve_system(&sys)? {
            Solution::Unique(x) => println!("solved x = {x} (matches: {})", x == secret),
            Solution::Underdetermined { rank } => println!("underdetermined ({} free bits)", n - rank),
            Solution::Inconsistent => println!("inconsistent"),
        }
    }
    Ok(())
}
