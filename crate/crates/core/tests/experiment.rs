mod common;

use common::*;
use tsuae_core::baselines::MethodId;
use tsuae_core::experiment::*;
use tsuae_core::monitor::statistics;
use tsuae_core::Error;

fn read(dir: &std::path::Path, rel: &str) -> String {
    std::fs::read_to_string(dir.join(rel)).unwrap()
}

#[test]
fn same_config_gives_byte_identical_outputs() {
    let cfg = quick_config(4, &["tsuae", "pca", "pls"]);
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_experiment(&cfg, a.path()).unwrap();
    let mb = run_experiment(&cfg, b.path()).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.input_hash, mb.input_hash);
    for rel in &ma.files {
        assert_eq!(
            std::fs::read(a.path().join(rel)).unwrap(),
            std::fs::read(b.path().join(rel)).unwrap(),
            "{rel} differs"
        );
    }
}

#[test]
fn every_manifest_file_exists() {
    let cfg = quick_config(1, &["sae", "rr"]);
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_experiment(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.status, "complete");
    for rel in manifest.files.iter().chain(manifest.models.values()) {
        assert!(dir.path().join(rel).is_file(), "{rel} missing");
    }
    let text = read(dir.path(), "manifest.toml");
    assert!(text.contains("status = \"complete\""));
    assert!(text.contains(&manifest.input_hash));
}

#[test]
fn pca_only_run_reports_only_the_process_subspace() {
    let cfg = quick_config(2, &["pca"]);
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let (_, rows) = parse_csv_rows(&read(dir.path(), "metrics.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "pca" && r[2] == "Dx"));
    let table = read(dir.path(), "table.txt");
    assert_eq!(
        table
            .lines()
            .skip(1)
            .filter(|l| l.trim_end().ends_with('/'))
            .count(),
        4
    );
    let (_, series) = parse_csv_rows(&read(dir.path(), "series/fault2__pca.csv"));
    assert!(series.iter().all(|r| r[3].is_empty() && r[4].is_empty()));
}

#[test]
fn series_files_cover_every_sample_and_reproduce_the_metrics() {
    let cfg = quick_config(5, &["tsuae", "pca", "pls", "tssae"]);
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let (_, metrics) = parse_csv_rows(&read(dir.path(), "metrics.csv"));
    assert_eq!(metrics.len(), 2 * (2 + 1 + 1 + 2));
    for row in &metrics {
        let slug = row[0].replace(':', "_");
        let (_, series) =
            parse_csv_rows(&read(dir.path(), &format!("series/{}__{slug}.csv", row[1])));
        assert_eq!(series.len(), 1000);
        let (value_col, limit_col) = if row[2] == "Dx" { (1, 2) } else { (3, 4) };
        let limit: f64 = series[0][limit_col].parse().unwrap();
        assert!(series
            .iter()
            .all(|r| r[limit_col].parse::<f64>().unwrap() == limit));
        assert_eq!(fmt4(limit), row[3]);
        let over = |range: std::ops::Range<usize>| {
            series[range]
                .iter()
                .filter(|r| r[value_col].parse::<f64>().unwrap() > limit)
                .count()
                .to_string()
        };
        assert_eq!((row[4].as_str(), row[5].as_str()), ("200", "800"));
        assert_eq!(over(0..200), row[6]);
        assert_eq!(over(200..1000), row[7]);
    }
}

#[test]
fn saved_model_scores_another_run_like_in_process_scoring() {
    let cfg_a = quick_config(11, &["tsuae", "pls"]);
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_experiment(&cfg_a, dir.path()).unwrap();
    let run_a = execute(&cfg_a).unwrap();
    let run_b = execute(&quick_config(12, &["pca"])).unwrap();
    for id in [MethodId::Tsuae, MethodId::Pls] {
        let saved = load_model(dir.path().join(&manifest.models[&id.to_string()])).unwrap();
        let in_process = run_a.method(id).unwrap();
        assert_eq!(saved.method, in_process.fitted);
        for fault in &run_b.data.faults {
            let scored = score(&saved, &fault.raw, Some(fault.start)).unwrap();
            let (x, y) = standardize(
                &run_a.data.scaler,
                &fault.raw,
                &run_a.data.process_names,
                &run_a.data.quality_names,
            )
            .unwrap();
            let direct = statistics(&in_process.fitted, &x, y.as_ref()).unwrap();
            assert_eq!(scored.detection.statistics, direct);
        }
    }
}

#[test]
fn written_benchmark_reruns_identically_from_csv() {
    let cfg = quick_config(6, &["tsuae", "pca", "rr"]);
    let dir = tempfile::tempdir().unwrap();
    let csv_cfg = write_benchmark(&cfg, dir.path()).unwrap();
    for f in ["train.csv", "fault1.csv", "fault2.csv", "experiment.toml"] {
        assert!(dir.path().join(f).is_file());
    }
    let reloaded = ExperimentConfig::load(dir.path().join("experiment.toml")).unwrap();
    assert_eq!(reloaded, csv_cfg);
    let from_generator = execute(&cfg).unwrap();
    let from_csv = execute(&reloaded).unwrap();
    assert_eq!(
        metrics_csv(&from_generator.methods),
        metrics_csv(&from_csv.methods)
    );
    let subspaces: Vec<_> = from_csv.data.faults.iter().map(|f| f.subspace).collect();
    let expected: Vec<_> = from_generator
        .data
        .faults
        .iter()
        .map(|f| f.subspace)
        .collect();
    assert_eq!(subspaces, expected);
}

#[test]
fn input_hash_tracks_csv_content() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bsm1_config(dir.path(), 3);
    let before = input_hash(&cfg).unwrap();
    assert_eq!(before, input_hash(&cfg.clone()).unwrap());
    let DataConfig::Csv { train, .. } = &cfg.data else {
        unreachable!()
    };
    let mut text = std::fs::read_to_string(train).unwrap();
    let last = text.lines().last().unwrap().to_owned();
    text.push_str(&last);
    text.push('\n');
    std::fs::write(train, text).unwrap();
    assert_ne!(before, input_hash(&cfg).unwrap());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(input_hash(&cfg).unwrap(), input_hash(&other).unwrap());
}

#[test]
fn bsm1_schema_csv_runs_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bsm1_config(dir.path(), 8);
    let out = dir.path().join("out");
    run_experiment(&cfg, &out).unwrap();
    let table = read(&out, "table.txt");
    assert!(!table.contains(" - "), "{table}");
    let (_, metrics) = parse_csv_rows(&read(&out, "metrics.csv"));
    assert_eq!(metrics.len(), 2 * 8);
    let (_, series) = parse_csv_rows(&read(&out, "series/fault1__tsuae.csv"));
    assert_eq!(series.len(), BSM1_SERIES);
    assert!(metrics.iter().all(|r| r[4] == "672" && r[5] == "672"));
}

#[test]
fn failed_stage_is_recorded_in_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bsm1_config(dir.path(), 1);
    let DataConfig::Csv { train, .. } = &cfg.data else {
        unreachable!()
    };
    let train = train.clone();
    let out = dir.path().join("out");
    std::fs::write(&train, "T_N,BOD5\n1,2\n").unwrap();
    let err = run_experiment(&cfg, &out).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let manifest = read(&out, "manifest.toml");
    assert!(manifest.contains("status = \"failed\""));
    assert!(manifest.contains("failed_stage = \"data\""));

    cfg.methods = vec!["nope".into()];
    assert!(matches!(
        run_experiment(&cfg, &out),
        Err(Error::UnknownMethod(_))
    ));
}
