//! Drive an experiment from a TOML config, the same way the CLI does.

use phasesep::runner::{parse_config_str, run, ExperimentKind, Overrides};

const CONFIG: &str = r#"
experiment = "learn-mf"
n = [3, 5]
seed = 42
strategies = ["shadow", "fourier"]
label_mode = "parity"
"#;

fn main() -> phasesep::Result<()> {
    let dir = std::env::temp_dir().join("phasesep-run-config");
    let overrides = Overrides { out: Some(dir.clone()), ..Overrides::default() };
    let cfg = parse_config_str(CONFIG, ExperimentKind::LearnMf, &overrides)?;
    println!("config hash {}", cfg.hash());
    let outcome = run(&cfg)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for f in &outcome.manifest.files {
        println!("{} ({} bytes)", dir.join(&f.path).display(), f.bytes);
    }
    Ok(())
}
