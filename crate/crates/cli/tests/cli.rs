use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twostage"))
        .args(args)
        .current_dir(dir)
        .env_remove("TWOSTAGE_THREADS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &["frobnicate"])), 2);
    assert_eq!(code(&run(d.path(), &["figures"])), 2);
    let o = run(d.path(), &["figures", "no-such-figure"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no-such-figure"));
    fs::write(d.path().join("bad.cfg"), "thetta = 0.3\n").unwrap();
    let o = run(d.path(), &["synth", "--config", "bad.cfg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("thetta"));
    assert_eq!(code(&run(d.path(), &["--help"])), 0);
}

#[test]
fn bad_thread_count_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_twostage"))
        .args(["figures", "ph-vs-theta"])
        .current_dir(d.path())
        .env("TWOSTAGE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn input_errors_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["estimate", "missing.csv"]);
    assert_eq!(code(&o), 3);
    fs::write(
        d.path().join("bad.csv"),
        "job_id,applicant_id,gender,p_screen,p_hire,shortlisted\nj,a1,m,0.5,0.4,1\nj,a2,x,0.5,0.4,0\n",
    )
    .unwrap();
    let o = run(d.path(), &["estimate", "bad.csv"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    fs::write(d.path().join("future.csv"), "# twostage-csv/2.0 kind=applicants\njob_id\n").unwrap();
    assert_eq!(code(&run(d.path(), &["estimate", "future.csv"])), 3);
}

#[test]
fn held_lock_blocks_a_second_writer() {
    let d = tempfile::tempdir().unwrap();
    fs::create_dir(d.path().join("out")).unwrap();
    fs::write(d.path().join("out/.twostage.lock"), "").unwrap();
    let o = run(d.path(), &["figures", "ph-vs-theta"]);
    assert_eq!(code(&o), 3);
    fs::remove_file(d.path().join("out/.twostage.lock")).unwrap();
    assert_eq!(code(&run(d.path(), &["figures", "ph-vs-theta"])), 0);
    assert!(!d.path().join("out/.twostage.lock").exists());
}

#[test]
fn outputs_carry_version_hash_and_seed() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("a.cfg"), "theta = 0.3\n").unwrap();
    assert_eq!(code(&run(d.path(), &["figures", "ph-vs-theta", "--config", "a.cfg", "--seed", "9", "--out", "a"])), 0);
    assert_eq!(code(&run(d.path(), &["figures", "ph-vs-theta", "--out", "b"])), 0);
    let a = fs::read_to_string(d.path().join("a/ph-vs-theta.csv")).unwrap();
    let b = fs::read_to_string(d.path().join("b/ph-vs-theta.csv")).unwrap();
    let (ha, hb) = (a.lines().next().unwrap(), b.lines().next().unwrap());
    assert!(ha.starts_with("# twostage-csv/1.0 kind=ph-vs-theta config_hash=") && ha.ends_with(" seed=9"), "{ha}");
    assert!(hb.ends_with(" seed=1"));
    assert_ne!(ha.split(' ').nth(3), hb.split(' ').nth(3));
    let meta = fs::read_to_string(d.path().join("a/ph-vs-theta.csv.meta")).unwrap();
    assert!(meta.contains("param.theta = 0.3"));
}

#[test]
fn config_seed_used_without_flag() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.cfg"), "seed = 42\njobs = 1\nn_per_job = 50\n").unwrap();
    assert_eq!(code(&run(d.path(), &["synth", "--config", "s.cfg"])), 0);
    let text = fs::read_to_string(d.path().join("out/applicants.csv")).unwrap();
    assert!(text.lines().next().unwrap().ends_with("seed=42"));
    assert_eq!(text.lines().count(), 52);
}

#[test]
fn synth_then_estimate_round_trip() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("s.cfg"),
        "jobs = 3\nn_per_job = 4000\ntheta = 0.5\ndelta = 0.1\np_hire_coverage = shortlisted\n",
    )
    .unwrap();
    assert_eq!(code(&run(d.path(), &["synth", "--config", "s.cfg", "--out", "data"])), 0);
    let o = run(d.path(), &["estimate", "data/applicants.csv", "--counterfactual", "--out", "est"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let jobs = fs::read_to_string(d.path().join("est/job_estimates.csv")).unwrap();
    assert_eq!(jobs.lines().count(), 5);
    // only shortlisted applicants carry p_hire here
    assert!(jobs.lines().nth(2).unwrap().contains(",4000,600,120"));
    for f in ["aggregate.csv", "skipped_jobs.csv", "counterfactual.csv", "counterfactual_summary.csv"] {
        assert!(d.path().join("est").join(f).exists(), "{f}");
    }
}
