use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mather_lp_cli::{parse_config, Manifest, Overrides};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mather-lp"));
    cmd.env_remove("MATHER_LP_WORKERS");
    cmd
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/configs")
        .join(format!("{name}.json"))
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn minimal_minimize_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&example("minimize"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["result.json", "measure.csv", "manifest.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let result: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    let min = result["result"]["min-action"].as_f64().unwrap();
    assert!((-1.02..=-0.98).contains(&min));
    let measure = fs::read_to_string(out.join("measure.csv")).unwrap();
    assert_eq!(measure.lines().next(), Some("x-index,v-index,weight"));
}

#[test]
fn every_example_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for name in [
        "minimize",
        "alpha-curve",
        "beta-curve",
        "genericity",
        "c-sweep",
        "eps-sweep",
        "validate-flow",
    ] {
        let out = tmp.path().join(name);
        let o = run(&example(name), &out, &["--workers", "4"]);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        for f in &manifest.files {
            assert!(out.join(f).is_file(), "{name}: {f}");
        }
        for f in fs::read_dir(&out).unwrap() {
            assert!(fs::read(f.unwrap().path()).unwrap().is_ascii());
        }
    }
}

#[test]
fn missing_n_x_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "minimize", "lagrangian": {"dim": 1}, "grid": {"n-v": 9}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("grid") && err.contains("n-x") && err.contains("line"), "{err}");
}

#[test]
fn malformed_or_unreadable_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "{\"command\": \"minimize\",\n \"lagrangian\": ");
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = run(&tmp.path().join("absent.json"), &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));

    let cfg = write_config(
        tmp.path(),
        r#"{"command": "explode", "lagrangian": {"dim": 1}, "grid": {"n-x": 8}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("command"));
}

#[test]
fn result_json_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "genericity", "lagrangian": {"dim": 1}, "grid": {"n-x": 32, "n-v": 9},
            "experiment": {"n-samples": 12, "n-modes": 3}}"#,
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&cfg, &a, &["--seed", "11", "--workers", "1"]).status.success());
    assert!(run(&cfg, &b, &["--seed", "11", "--workers", "4"]).status.success());
    let ra = fs::read(a.join("result.json")).unwrap();
    assert_eq!(ra, fs::read(b.join("result.json")).unwrap());
    assert_eq!(fs::read(a.join("trials.csv")).unwrap(), fs::read(b.join("trials.csv")).unwrap());

    let c = tmp.path().join("c");
    assert!(run(&cfg, &c, &["--seed", "12"]).status.success());
    assert_ne!(ra, fs::read(c.join("result.json")).unwrap());

    let m = tmp.path().join("m1");
    let n = tmp.path().join("m2");
    assert!(run(&example("minimize"), &m, &[]).status.success());
    assert!(run(&example("minimize"), &n, &[]).status.success());
    assert_eq!(fs::read(m.join("result.json")).unwrap(), fs::read(n.join("result.json")).unwrap());
}

#[test]
fn unwritable_output_dir_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run(&example("minimize"), &blocker.join("out"), &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("file"));
}

#[test]
fn truncation_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    // minimizer sits at v = −5, far beyond what the escalation cap can reach
    let cfg = write_config(
        tmp.path(),
        r#"{"command": "minimize", "lagrangian": {"dim": 1, "cohomology": [5.0]},
            "grid": {"n-x": 8, "n-v": 3}}"#,
    );
    let o = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("solver"));
}

#[test]
fn manifest_round_trips_to_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = bin()
        .env("MATHER_LP_WORKERS", "3")
        .arg("run")
        .arg(example("eps-sweep"))
        .args(["--seed", "42", "--output-dir"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();

    let overrides = Overrides {
        output_dir: Some(out.clone()),
        seed: Some(42),
        workers: None,
    };
    let effective = parse_config(&fs::read_to_string(example("eps-sweep")).unwrap())
        .unwrap()
        .resolve(&overrides, Some("3"))
        .unwrap();
    assert_eq!(manifest.config, effective);
    assert_eq!(manifest.seed, 42);
    assert_eq!(manifest.config.workers, Some(3));
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));

    // the echoed config is itself a valid config
    let echoed = serde_json::to_string(&manifest.config).unwrap();
    let reparsed = parse_config(&echoed).unwrap();
    assert_eq!(reparsed, effective);
    assert_eq!(reparsed.resolve(&Overrides::default(), None).unwrap(), effective);
}

#[test]
fn alpha_curve_has_21_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    assert!(run(&example("alpha-curve"), &out, &[]).status.success());
    let text = fs::read_to_string(out.join("alpha.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 22);
    assert_eq!(lines[0], "c,alpha");
    let values: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    for i in 1..values.len() - 1 {
        assert!(values[i] <= 0.5 * (values[i - 1] + values[i + 1]) + 1e-8);
    }
}
