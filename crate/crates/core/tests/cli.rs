use std::path::Path;
use std::process::{Command, Output};

fn phasesep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasesep")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn learn_fq_writes_outputs_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phasesep(&["learn-fq", "--n", "3,5", "--seed", "9", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "manifest.json", "fq_learners.json", "fq_train_n3.jsonl", "fq_train_n5.jsonl"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
}

#[test]
fn out_of_range_n_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phasesep(&["separation", "--n", "13", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("n = 13"));
}

#[test]
fn bad_config_file_reports_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "experiment = \"hm\"\nn = [4]\n\n[trials]\nhm = 0\n");
    let out = phasesep(&["hm", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_key_and_wrong_experiment_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let typo = write(tmp.path(), "typo.toml", "experiment = \"separation\"\nseeed = 3\n");
    assert_eq!(code(&phasesep(&["separation", "--config", &typo])), 2);
    let other = write(tmp.path(), "other.toml", "experiment = \"hm\"\n");
    assert_eq!(code(&phasesep(&["separation", "--config", &other])), 2);
}

#[test]
fn leaky_at_large_n_needs_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let out = phasesep(&["learn-mf", "--n", "10", "--strategies", "leaky", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn report_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let run = phasesep(&["hm", "--n", "2,3", "--trials", "200", "--protocols", "quantum,random", "--out", dir]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(code(&phasesep(&["report", "--out", dir])), 0);

    std::fs::write(tmp.path().join("hm.csv"), "n\n").unwrap();
    let report = phasesep(&["report", "--out", dir]);
    assert_eq!(code(&report), 1);
    assert!(String::from_utf8_lossy(&report.stdout).contains("MODIFIED"));
}

#[test]
fn seed_changes_results_and_threads_do_not() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str, threads: &str| {
        let dir = tmp.path().join(name);
        let out = phasesep(&["learn-mf", "--n", "4", "--seed", seed, "--threads", threads, "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        std::fs::read(dir.join("mf_learners.json")).unwrap()
    };
    let a = run("a", "1", "1");
    assert_eq!(a, run("b", "1", "3"));
    assert_ne!(a, run("c", "2", "1"));
}
