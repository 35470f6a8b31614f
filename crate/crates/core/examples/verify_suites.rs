//! Run every brute-force oracle suite and print the tallies.

fn main() {
    let report = phasesep::verify::run_all(0);
    for s in &report.suites {
        println!("{:<12} {:>7} checks  {} failed", s.name, s.checks, s.failed);
        for f in &s.failures {
            println!("    {f}");
        }
    }
    println!("all passed: {}", report.passed());
}
