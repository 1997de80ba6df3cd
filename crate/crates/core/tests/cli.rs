use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use speclearn::cli::{cmd_eval, cmd_train, direct_csv, EvalArgs, RunArgs, RunConfig};
use speclearn::metrics::test_error;
use speclearn::model::MlpParams;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_speclearn"))
}

fn smoke_args(out: &Path) -> Vec<String> {
    [
        "train", "--problem", "linear1d", "--hidden", "6", "--samples", "30", "--epochs", "20",
        "--adam-epochs", "10", "--seed", "5", "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([out.display().to_string()])
    .collect()
}

#[test]
fn train_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(smoke_args(dir.path())).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let loss: f64 = stdout.trim().strip_prefix("final loss ").unwrap().parse().unwrap();
    assert!(loss.is_finite());
    for f in ["checkpoint.json", "loss.csv", "config.toml"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("loss.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn train_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(bin().args(smoke_args(d.path())).status().unwrap().success());
    }
    for f in ["loss.csv", "checkpoint.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn echoed_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(bin().args(smoke_args(a.path())).status().unwrap().success());
    let status = bin()
        .args(["train", "--config"])
        .arg(a.path().join("config.toml"))
        .arg("--out")
        .arg(b.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(a.path().join("checkpoint.json")).unwrap(),
        std::fs::read(b.path().join("checkpoint.json")).unwrap()
    );
}

#[test]
fn configuration_errors_exit_with_two() {
    let out = bin().args(["train"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no problem"));
    let out = bin().args(["train", "--problem", "missing"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));
    let out = bin().args(["direct", "--problem", "linear1d", "--params", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn training_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["train", "--problem", "cubic1d", "--hidden", "4", "--samples", "5", "--epochs", "3"])
        .args(["--adam-epochs", "3", "--lr", "1e300", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn direct_writes_solution_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["direct", "--problem", "linear1d", "--params", "4,4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("linear1d_direct.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let worst = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4);
}

#[test]
fn direct_refinement_and_out_of_distribution() {
    let error = |n: usize, params: [f64; 2]| {
        let args = RunArgs { problem: Some("linear1d".into()), basis_n: Some(n), ..RunArgs::default() };
        let (cfg, spec) = RunConfig::resolve(&args).unwrap();
        direct_csv(&cfg.discretisation(spec).unwrap(), &params, 101).unwrap().1
    };
    assert!(error(10, [4.0, 4.0]) <= error(4, [4.0, 4.0]));
    assert!(error(10, [9.0, 2.0]) < 1e-4);
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--problem", "linear1d", "--hidden-values", "4", "--samples-values", "10"])
        .args(["--epochs", "4", "--adam-epochs", "2", "--test-count", "4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("linear1d_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn eval_of_saved_checkpoint_matches_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let run = RunArgs {
        problem: Some("linear1d".into()),
        hidden: Some(6),
        samples: Some(20),
        epochs: Some(10),
        adam_epochs: Some(5),
        out: Some(dir.path().to_path_buf()),
        ..RunArgs::default()
    };
    let outcome = cmd_train(&run).unwrap();
    let (cfg, spec) = RunConfig::resolve(&run).unwrap();
    let disc = cfg.discretisation(Arc::clone(&spec)).unwrap();
    let in_memory = test_error(&disc, &outcome.params, 10, 0, 51).unwrap();
    let loaded = MlpParams::load(&dir.path().join("checkpoint.json")).unwrap();
    assert_eq!(loaded, outcome.params);
    let eval = EvalArgs {
        run: RunArgs { out: None, ..run },
        checkpoint: dir.path().join("checkpoint.json"),
        test_count: 10,
        resolution: 51,
    };
    let from_disk = cmd_eval(&eval).unwrap();
    assert_eq!(from_disk.l2_test.to_bits(), in_memory.l2_test.to_bits());
    assert_eq!(from_disk.per_sample_linf, in_memory.per_sample_linf);
}

#[test]
fn custom_problem_file_trains() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.toml");
    std::fs::write(
        &problem,
        r#"
name = "custom_linear"
zeta = 0.5
length = 1.0
forcing = "a * gamma(3) / gamma(3 - zeta) * x^(2 - zeta) - a * gamma(4) / gamma(4 - zeta) * x^(3 - zeta)"
exact = "a * (1 - x) * x^2"
params = [{ name = "a", low = 1.0, high = 2.0 }]
"#,
    )
    .unwrap();
    let out = bin()
        .args(["direct", "--problem-file"])
        .arg(&problem)
        .args(["--params", "1.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let err: f64 = stdout.trim().strip_prefix("max abs error ").unwrap().parse().unwrap();
    assert!(err < 1e-6, "{err}");
}
