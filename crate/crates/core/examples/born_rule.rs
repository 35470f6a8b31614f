//! Prepare a phase state, run the matching circuit, and print the Born
//! distribution over measurement outcomes.

use phasesep::concepts::BoolFunc;
use phasesep::fqlearner::build_ux;
use phasesep::gf2::BitVec;

fn main() -> phasesep::Result<()> {
    // f on 3 bits, truth table indexed by y.
    let f = BoolFunc::from_table(&[false, true, true, false, true, false, false, false])?;
    let x = BitVec::from_bit_str("101")?;
    let circuit = build_ux(&x)?;
    println!("x = {x}, pivot qubit {}, CNOTs {:?}", circuit.pivot(), circuit.cnots());

    let state = circuit.final_state(&f)?;
    println!("norm^2 = {:.12}", state.norm_sqr());
    for (w, p) in state.outcome_distribution().iter().enumerate() {
        if *p > 0.0 {
            let (y0, b) = circuit.decode(w);
            println!("outcome {w:03b}: p = {p:.4}  -> edge ({y0}, {}), parity {}", y0 ^ x.as_index(), b as u8);
        }
    }
    Ok(())
}
