use std::path::Path;
use std::process::Command;

fn thermalsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermalsim"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: &str = r#"
kind = "error-vs-t"
seed = 3

[model]
kind = "mixed-field-ising"
n = 6

[grid]
tau = [0.25]
t = [0.5, 1.0]

[noise]
p0 = 3.5e-4
p1 = 9.5e-4
"#;

#[test]
fn dynamics_run_writes_reproducible_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = thermalsim()
            .args(["dynamics", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--threads", "1"])
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(out.join("dynamics.csv")).unwrap());
        assert!(out.join("report.json").exists());
        assert!(out.join("seeds.csv").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let run = thermalsim().args(["dynamics", "--seed", "99", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(run.status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("seed = 3", "seed = 3\nunknown = 1"));
    let run = thermalsim().args(["dynamics", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(run.status.code(), Some(2));

    let missing = thermalsim().args(["dynamics", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let cfg = write_config(dir.path(), SMALL);
    let wrong_verb = thermalsim().args(["xy-decay", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(wrong_verb.status.code(), Some(2));
}

#[test]
fn infeasible_sizes_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("n = 6", "n = 20"));
    let run = thermalsim().args(["dynamics", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn fit_verb_predicts_from_given_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
kind = "fit-and-predict"
seed = 1

[model]
kind = "mixed-field-ising"
n = 20

[grid]
tau = [0.1, 0.2]
t = [4.0]

[noise]
p0 = 3.5e-4
p1 = 9.6e-4

[fit]
s = 0.7661
c = 0.0979
"#,
    );
    let out = dir.path().join("o");
    for verb in ["fit", "predict"] {
        let run = thermalsim().arg(verb).arg("--config").arg(&cfg).arg("--out").arg(&out).output().unwrap();
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    }
    let text = std::fs::read_to_string(out.join("prediction.csv")).unwrap();
    let row = text.lines().nth(2).unwrap();
    let error: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((error - 0.012220524).abs() < 1e-6, "{row}");
}

#[test]
fn example_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let cfg = thermalsim::harness::ExperimentConfig::load(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert_eq!(seen, 10);
}
