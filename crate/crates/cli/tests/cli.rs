use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn isolab(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_isolab"));
    cmd.args(args).env_remove("ISOLAB_OUT");
    if let Some(p) = env_out {
        cmd.env("ISOLAB_OUT", p);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_names_every_experiment_and_module() {
    let o = isolab(&["list"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fuglede", "taylor-identities", "counterexample", "weight-audit", "penalized-min"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing:\n{text}");
    }
    assert!(text.contains("negpower_lab") && text.contains("stability_lab"));
}

#[test]
fn help_documents_csv_columns() {
    let o = isolab(&["run", "--help"], None);
    let text = stdout(&o);
    assert!(text.contains("fuglede_samples.csv"));
    assert!(text.contains("counterexample_scan.csv: r, upper_partial"));
    assert!(text.contains("ISOLAB_OUT"));
}

#[test]
fn passing_run_exits_zero_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = isolab(&["run", "--experiment", "taylor-identities", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stdout(&o));
    for f in ["report.json", "scalars.csv", "taylor.csv", "divergence.csv", "config.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"experiment\": \"taylor-identities\""));
}

#[test]
fn env_var_sets_default_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let o = isolab(&["run", "--experiment", "weight-audit"], Some(tmp.path()));
    assert!(o.status.success());
    assert!(tmp.path().join("weight-audit").join("report.json").exists());
}

#[test]
fn same_seed_gives_identical_csvs_and_embedded_config_reproduces() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["run", "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = isolab(&args, None);
        assert!(o.status.success(), "{}", stdout(&o));
        out
    };
    let a = run("a", &["--experiment", "counterexample", "--seed", "5"]);
    let b = run("b", &["--experiment", "counterexample", "--seed", "5"]);
    let cfg = a.join("config.toml");
    let c = run("c", &["--config", cfg.to_str().unwrap()]);
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .flatten()
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in &names {
        let x = fs::read(a.join(n)).unwrap();
        assert_eq!(x, fs::read(b.join(n)).unwrap(), "{n}");
        assert_eq!(x, fs::read(c.join(n)).unwrap(), "{n} from embedded config");
    }
}

#[test]
fn json_config_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "fuglede", "samples": 3, "weight": {"name": "zero"}}"#).unwrap();
    let out = tmp.path().join("o");
    let o = isolab(
        &["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--resolution", "64"],
        None,
    );
    assert!(o.status.success(), "{}", stdout(&o));
    let toml = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(toml.contains("resolution = 64"), "{toml}");
    assert!(toml.contains("name = \"zero\""));
}

#[test]
fn failing_verdict_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    // a single decade of asymmetry is not enough for the span verdict
    fs::write(
        &cfg,
        "experiment = \"ellipsoid-sharpness\"\n[scan]\neccentricities = [0.1, 0.05, 0.025]\n",
    )
    .unwrap();
    let o = isolab(&["run", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL symdiff_spans_two_decades"));
}

#[test]
fn errors_exit_two_with_structured_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = isolab(&["run", "--experiment", "nonsense", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = fs::read_to_string(out.join("error.json")).unwrap();
    assert!(err.contains("UnknownExperiment") && err.contains("nonsense"));

    // quadratic weight violates the degenerate hypothesis
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "experiment = \"degenerate-ratio\"\n[weight]\nname = \"quadratic\"\n").unwrap();
    let o = isolab(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(fs::read_to_string(out.join("error.json")).unwrap().contains("Precondition"));

    let o = isolab(&["run"], None);
    assert_eq!(o.status.code(), Some(2));
}
