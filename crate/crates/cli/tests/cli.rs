use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hisp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hisp"))
        .args(args)
        .env_remove("HISP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn short_scenario(dir: &Path) -> String {
    let path = dir.join("short.toml");
    fs::write(
        &path,
        "case = \"short\"\nruns = 2\nseed = 4\nburn_in_steps = 2\n[scenario]\nduration = 32.0\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_series_mean_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path());
    let out = dir.path().join("out");
    let o = hisp(&[
        "run",
        "--scenario",
        &scenario,
        "--filter",
        "both",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let series = fs::read_to_string(out.join("caseshort_ospa.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next(),
        Some("case,filter,run,t,ospa,ospa_loc,ospa_card")
    );
    // 2 filters x 2 runs x 8 scans
    assert_eq!(lines.count(), 32);
    let mean = fs::read_to_string(out.join("caseshort_mean.csv")).unwrap();
    assert_eq!(mean.lines().count(), 1 + 2 * 8);
    let summary = fs::read_to_string(out.join("caseshort_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("short,hisp,2,")));
    assert!(summary.lines().any(|l| l.starts_with("short,phd,2,")));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mean OSPA"));
}

#[test]
fn same_flags_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path());
    let read = |name: &str| {
        let out = dir.path().join(name);
        let o = hisp(&[
            "run",
            "--scenario",
            &scenario,
            "--filter",
            "hisp",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        fs::read(out.join("caseshort_ospa.csv")).unwrap()
    };
    assert_eq!(read("a"), read("b"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = short_scenario(dir.path());
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_hisp"))
        .args([
            "run",
            "--scenario",
            &scenario,
            "--filter",
            "phd",
            "--runs",
            "1",
        ])
        .env("HISP_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    let series = fs::read_to_string(out.join("caseshort_ospa.csv")).unwrap();
    assert!(series
        .lines()
        .skip(1)
        .all(|l| l.starts_with("short,phd,0,")));
}

#[test]
fn bad_configuration_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hisp(&["run", "--case", "9", "--out", out]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown case 9"));
    let o = hisp(&["run", "--case", "1", "--tau-c", "0.5", "--out", out]);
    assert!(!o.status.success());
    let o = hisp(&["run", "--case", "1", "--ospa-p", "0.5", "--out", out]);
    assert!(!o.status.success());
    let missing = dir.path().join("missing.toml");
    let o = hisp(&["run", "--scenario", missing.to_str().unwrap()]);
    assert!(!o.status.success());
}

#[test]
fn unwritable_output_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let scenario = short_scenario(dir.path());
    let o = hisp(&[
        "run",
        "--scenario",
        &scenario,
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn verify_passes_and_detects_perturbation() {
    let ok = hisp(&["verify", "--instances", "50"]);
    assert!(ok.status.success());
    let text = String::from_utf8_lossy(&ok.stdout).to_string();
    assert!(text.contains("PASS") && !text.contains("FAIL"));
    assert_eq!(hisp(&["verify", "--instances", "50"]).stdout, ok.stdout);

    let bad = hisp(&["verify", "--instances", "50", "--perturb", "1e-6"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn dump_table_lists_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let o = hisp(&[
        "dump-table",
        "--case",
        "1",
        "--step",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("hypothesis-id,observation-id,log-mass"));
    let body: Vec<&str> = lines.collect();
    assert!(body.iter().any(|l| l.starts_with("b:3:0,3:0,")));
    assert!(body.iter().any(|l| l.contains(",phi,")));
    for l in &body {
        let mass: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(mass <= 1e-12, "{l}");
    }
    assert!(!hisp(&["dump-table", "--case", "1", "--step", "0"])
        .status
        .success());
}
