use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = r#"
seed = 3
methods = ["tsuae", "pca", "pls"]

[model]
iterations = 40
"#;

fn tsuae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsuae"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn quick_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let file = dir.join("quick.toml");
    std::fs::write(&file, format!("{QUICK}{extra}")).unwrap();
    file
}

#[test]
fn run_prints_the_table_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let out = dir.path().join("run");
    let o = tsuae(&["run", "--config", path(&cfg), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("tsuae Dy"));
    assert!(stdout.contains("pca Dy"));
    for f in [
        "metrics.csv",
        "thresholds.csv",
        "manifest.toml",
        "models/tsuae.model",
        "series/fault1__pls.csv",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let metrics = |seed: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut args = vec!["run", "--config", path(&cfg), "--out", path(&out)];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert!(tsuae(&args).status.success());
        std::fs::read_to_string(out.join("metrics.csv")).unwrap()
    };
    let base = metrics(None, "a");
    assert_eq!(base, metrics(Some("3"), "b"));
    assert_ne!(base, metrics(Some("4"), "c"));
}

#[test]
fn generate_then_score_a_saved_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let data = dir.path().join("data");
    assert!(
        tsuae(&["generate", "--config", path(&cfg), "--out", path(&data)])
            .status
            .success()
    );
    for f in ["train.csv", "fault1.csv", "fault2.csv", "experiment.toml"] {
        assert!(data.join(f).is_file(), "{f}");
    }
    let run = dir.path().join("run");
    assert!(tsuae(&["run", "--config", path(&cfg), "--out", path(&run)])
        .status
        .success());

    let series = dir.path().join("scored.csv");
    let o = tsuae(&[
        "score",
        "--model",
        path(&run.join("models/tsuae.model")),
        "--data",
        path(&data.join("fault1.csv")),
        "--fault-start",
        "201",
        "--out",
        path(&series),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = String::from_utf8(o.stdout).unwrap();
    assert_eq!(summary.lines().count(), 2);
    // The generated CSV is the same series the run monitored, so the scored
    // file matches the run's series file exactly.
    assert_eq!(
        std::fs::read_to_string(&series).unwrap(),
        std::fs::read_to_string(run.join("series/fault1__tsuae.csv")).unwrap()
    );
}

#[test]
fn sweep_uses_the_requested_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path(), "");
    let out = dir.path().join("sweep");
    let o = tsuae(&[
        "sweep-nf",
        "--config",
        path(&cfg),
        "--k",
        "0,0.1",
        "--out",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(String::from_utf8(o.stdout).unwrap().contains("fault2 FDR"));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");

    let bad = quick_config(dir.path(), "unknown_key = 1\n");
    assert_eq!(
        tsuae(&["run", "--config", path(&bad), "--out", path(&out)])
            .status
            .code(),
        Some(1)
    );

    let missing = dir.path().join("missing.toml");
    std::fs::write(
        &missing,
        "seed = 1\n[data]\nsource = \"csv\"\ntrain = \"nope.csv\"\nprocess = [\"a\"]\nquality = [\"q\"]\n[[fault]]\nname = \"f\"\nfile = \"nope.csv\"\n",
    )
    .unwrap();
    assert_eq!(
        tsuae(&["run", "--config", path(&missing), "--out", path(&out)])
            .status
            .code(),
        Some(4)
    );

    let cfg = quick_config(dir.path(), "");
    let run = dir.path().join("run");
    assert!(tsuae(&["run", "--config", path(&cfg), "--out", path(&run)])
        .status
        .success());
    let model = run.join("models/pca.model");
    let wrong_columns = dir.path().join("wrong.csv");
    std::fs::write(&wrong_columns, "a,b\n1,2\n").unwrap();
    let score = |model: &Path, data: &Path| {
        tsuae(&[
            "score",
            "--model",
            path(model),
            "--data",
            path(data),
            "--out",
            path(&dir.path().join("s.csv")),
        ])
        .status
        .code()
    };
    assert_eq!(score(&model, &wrong_columns), Some(2));

    let text = std::fs::read_to_string(&model).unwrap();
    let corrupted = dir.path().join("corrupt.model");
    std::fs::write(&corrupted, text.replacen("tensor", "tensoR", 1)).unwrap();
    assert_eq!(score(&corrupted, &wrong_columns), Some(4));

    assert_eq!(tsuae(&["run"]).status.code(), Some(1));
}
