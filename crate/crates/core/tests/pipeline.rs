use std::fs;

use burden_audit::harness::{
    load_run, rebuild_report, run_experiment, ExperimentConfig, GaProfile, Preset, REPORT_FILE,
};

fn config(preset: Preset, seed: u64, dir: &std::path::Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(preset, seed, GaProfile::Desk);
    c.output_dir = dir.to_path_buf();
    c
}

#[test]
fn identical_configs_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&config(Preset::Da, 11, &dir.path().join("a"))).unwrap();
    let b = run_experiment(&config(Preset::Da, 11, &dir.path().join("b"))).unwrap();
    assert_eq!(fs::read(&a.report).unwrap(), fs::read(&b.report).unwrap());
    assert_eq!(
        fs::read(&a.counterfactuals).unwrap(),
        fs::read(&b.counterfactuals).unwrap()
    );
    assert_eq!(fs::read(&a.model).unwrap(), fs::read(&b.model).unwrap());
}

#[test]
fn different_seeds_change_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&config(Preset::Db, 1, &dir.path().join("a"))).unwrap();
    let b = run_experiment(&config(Preset::Db, 2, &dir.path().join("b"))).unwrap();
    assert_ne!(
        a.audit.provenance.config_digest,
        b.audit.provenance.config_digest
    );
    assert_eq!(a.audit.provenance.ga_seed, 1);
}

#[test]
fn run_directory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let run = run_experiment(&config(Preset::Db, 42, dir.path())).unwrap();
    let loaded = load_run(dir.path()).unwrap();
    assert_eq!(loaded.dataset.len(), 80);
    assert_eq!(
        loaded.counterfactuals.len(),
        run.audit
            .fairness
            .groups
            .iter()
            .map(|g| g.predicted_negative)
            .sum::<usize>()
    );
    assert_eq!(rebuild_report(dir.path()).unwrap(), run.audit);
    let timings = fs::read_to_string(&run.timings_file).unwrap();
    for stage in [
        "data",
        "train",
        "statistical_parity",
        "counterfactuals",
        "report",
        "emit",
    ] {
        assert!(timings.contains(stage), "{stage} missing from timings");
    }
}

#[test]
fn failed_run_removes_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut c = config(Preset::Da, 1, &out);
    c.sensitive_column = Some("nope".into());
    assert!(run_experiment(&c).is_err());
    assert!(!out.exists());

    // A pre-existing directory is kept, but nothing is left inside it.
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    assert!(run_experiment(&c).is_err());
    let left: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(left, vec![std::ffi::OsString::from("keep.txt")]);
}

#[test]
fn rerun_overwrites_previous_report() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config(Preset::Da, 1, dir.path())).unwrap();
    let first = fs::read(dir.path().join(REPORT_FILE)).unwrap();
    run_experiment(&config(Preset::Da, 2, dir.path())).unwrap();
    assert_ne!(first, fs::read(dir.path().join(REPORT_FILE)).unwrap());
}
