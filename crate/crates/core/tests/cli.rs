use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const GBM: &str = r#"{"alpha":1,"mu":{"atoms":[[0,-1]]},"nu":{"atoms":[[0,1]]},"phi":{"constant":1},"numerical":{"h":0.01,"T":10,"mc":{"paths":500,"seed":3,"T":1}}}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("problem.json");
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sdde-meansq"));
    cmd.args(&args[..1])
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(&args[1..]);
    if let Some(t) = threads {
        cmd.env("SDDE_MEANSQ_THREADS", t);
    }
    cmd.output().unwrap()
}

fn entries(dir: &Path) -> usize {
    fs::read_dir(dir).map_or(0, |d| d.count())
}

#[test]
fn every_subcommand_succeeds_on_a_stable_problem() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GBM);
    let out = dir.path().join("out");
    for (cmd, file) in [
        ("classify", "report.json"),
        ("resolvent", "resolvent.csv"),
        ("meansquare", "meansq_renewal.csv"),
        ("simulate", "meansq_mc.csv"),
        ("compare", "compare.csv"),
    ] {
        let o = run(&[cmd], &config, &out, None);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(out.join(file).exists(), "{cmd}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("meansq_mc.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
    assert_eq!(meta["paths"], 500);
    assert_eq!(meta["diverged"], 0);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["classification"], "SUBCRITICAL");
    assert!((report["norm_sq_gr"].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn classify_prints_the_classification() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &GBM.replace("[[0,1]]", "[[0,2]]"));
    let o = run(&["classify"], &config, dir.path(), None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "SUPERCRITICAL");
}

#[test]
fn growing_resolvent_is_uncertified() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &GBM.replace("[[0,-1]]", "[[0,0.2]]"));
    let o = run(&["classify"], &config, dir.path(), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let misaligned = write_config(dir.path(), &GBM.replace("\"h\":0.01", "\"h\":0.0007"));
    let o = run(&["classify"], &misaligned, &out, None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("GRID_MISALIGNED"));
    assert_eq!(entries(&out), 0);

    let broken = write_config(dir.path(), "{\"alpha\":");
    assert_eq!(
        run(&["resolvent"], &broken, &out, None).status.code(),
        Some(1)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["resolvent"], &missing, &out, None).status.code(),
        Some(1)
    );
    let good = write_config(dir.path(), GBM);
    assert_eq!(
        run(&["resolvent", "--step", "0.003"], &good, &out, None)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["bogus"], &good, &out, None).status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_with_three_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // h g(0)/2 > 1 for this kernel at h = 0.01
    let config = write_config(dir.path(), &GBM.replace("[[0,1]]", "[[0,200]]"));
    let o = run(&["meansquare"], &config, &out, None);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(entries(&out), 0);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GBM);
    let out = dir.path().join("out");
    let o = run(
        &[
            "simulate",
            "--seed",
            "8",
            "--paths",
            "40",
            "--step",
            "0.02",
            "--horizon",
            "0.5",
        ],
        &config,
        &out,
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("meansq_mc.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 8);
    assert_eq!(meta["paths"], 40);
    assert_eq!(meta["h"], 0.02);
    assert_eq!(meta["T"], 0.5);
    let csv = fs::read_to_string(out.join("meansq_mc.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 26);
    assert_eq!(csv.lines().next(), Some("t,mean_sq,stderr"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), GBM);
    let read = |name: &str, threads: &str, file: &str| {
        let out = dir.path().join(name);
        assert_eq!(
            run(&["compare"], &config, &out, Some(threads))
                .status
                .code(),
            Some(0)
        );
        fs::read(out.join(file)).unwrap()
    };
    let a = read("a", "1", "compare.csv");
    let b = read("b", "3", "compare.csv");
    let c = read("c", "3", "compare.csv");
    assert_eq!(a, b);
    assert_eq!(b, c);
    assert!(!a.contains(&b'\r'));
}
