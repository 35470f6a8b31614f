//! The fully-quantum vs measure-first sweep, written as CSV plus a summary.

use phasesep::evaluation::{separation_experiment, SeparationConfig, StrategySpec};

fn main() -> phasesep::Result<()> {
    let cfg = SeparationConfig {
        strategies: vec![StrategySpec::named("shadow")?, StrategySpec::named("fourier")?],
        ..SeparationConfig::default()
    };
    let res = separation_experiment(&cfg)?;
    println!("{:>2} {:<3} {:<9} {:>5} {:>6}  median   q75    max  verdict", "n", "", "strategy", "ell", "m");
    for s in &res.summary {
        println!(
            "{:>2} {:<3} {:<9} {:>5} {:>6}  {:.3}  {:.3}  {:.3}  {}",
            s.n, s.protocol, s.strategy, s.ell, s.m, s.median_tv, s.q75_tv, s.max_tv, s.verdict
        );
    }
    let csv = res.csv();
    println!("{} CSV rows; first: {}", res.rows.len(), csv.lines().nth(1).unwrap_or(""));
    Ok(())
}
