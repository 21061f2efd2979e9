#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tsuae_core::experiment::{DataConfig, ExperimentConfig, FaultConfig, FaultUnits, ModelSection};

pub const BSM1_PROCESS: [&str; 14] = [
    "T_N", "T_COD", "S_NH_e", "T_SS", "S_S_i", "S_NH_i", "S_O_3", "S_NO_3", "S_NH_3", "S_O_4",
    "S_O_5", "S_NO_5", "S_NH_5", "S_S_5",
];
pub const BSM1_QUALITY: &str = "BOD5";
pub const BSM1_TRAIN: usize = 672;
pub const BSM1_SERIES: usize = 1344;

/// Small budgets for pipeline plumbing tests.
pub fn quick_model() -> ModelSection {
    ModelSection {
        iterations: Some(60),
        student_learning_rate: Some(1e-2),
        teacher_learning_rate: Some(1e-2),
        ..ModelSection::default()
    }
}

/// Rows of a plant with four latent drivers, a daily cycle (96 samples per
/// day) and a positive, nonlinear BOD5.
pub fn bsm1_rows(n: usize, seed: u64, stream: u64) -> Vec<[f64; 15]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut mix = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let w: Vec<[f64; 4]> = (0..14)
        .map(|_| std::array::from_fn(|_| StandardNormal.sample(&mut mix)))
        .collect();
    let levels = [
        15.0, 48.0, 4.5, 13.0, 70.0, 31.0, 1.7, 5.6, 9.5, 2.4, 0.5, 10.4, 1.7, 0.9,
    ];
    (0..n)
        .map(|i| {
            let day = (i as f64 / 96.0) * std::f64::consts::TAU;
            let mut z: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
            z[0] += day.sin();
            z[1] += 0.5 * day.cos();
            let mut row = [0.0; 15];
            for j in 0..14 {
                let e: f64 = StandardNormal.sample(&mut rng);
                let signal: f64 = (0..4).map(|k| w[j][k] * z[k]).sum();
                row[j] = levels[j] * (1.0 + 0.08 * signal) + 0.05 * levels[j] * 0.1 * e;
            }
            row[14] =
                2.5 + 0.4 * (z[0] + 0.5 * z[1]).powi(2) + (0.3 * z[2]).exp() + 0.2 * z[3].tanh();
            row
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[[f64; 15]]) {
    let mut text = BSM1_PROCESS.join(",") + "," + BSM1_QUALITY + "\n";
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        text += &(cells.join(",") + "\n");
    }
    std::fs::write(path, text).unwrap();
}

/// Training file plus two monitoring files whose second half is faulty: a
/// step on influent ammonia (process) and a step on BOD5 (quality).
pub fn write_bsm1_dataset(dir: &Path, seed: u64) -> (PathBuf, Vec<PathBuf>) {
    let train = dir.join("bsm1_train.csv");
    write_rows(&train, &bsm1_rows(BSM1_TRAIN, seed, 0));
    let mut faults = Vec::new();
    for (k, (col, shift)) in [(5usize, 8.0), (14usize, 1.5)].into_iter().enumerate() {
        let mut rows = bsm1_rows(BSM1_SERIES, seed, 1 + k as u64);
        for r in rows.iter_mut().skip(BSM1_TRAIN) {
            r[col] += shift;
        }
        let path = dir.join(format!("bsm1_fault{}.csv", k + 1));
        write_rows(&path, &rows);
        faults.push(path);
    }
    (train, faults)
}

pub fn bsm1_config(dir: &Path, seed: u64) -> ExperimentConfig {
    let (train, files) = write_bsm1_dataset(dir, seed);
    let mut cfg = ExperimentConfig::numerical_example(seed);
    cfg.data = DataConfig::Csv {
        train,
        process: BSM1_PROCESS.iter().map(|s| s.to_string()).collect(),
        quality: vec![BSM1_QUALITY.to_string()],
    };
    cfg.model = quick_model();
    cfg.faults = files
        .into_iter()
        .enumerate()
        .map(|(k, file)| FaultConfig {
            name: format!("fault{}", k + 1),
            target: None,
            magnitude: 0.0,
            start: BSM1_TRAIN + 1,
            units: FaultUnits::Raw,
            file: Some(file),
            subspace: Some(if k == 0 { "process" } else { "quality" }.to_string()),
        })
        .collect();
    cfg
}

/// Generated numerical example with short training budgets.
pub fn quick_config(seed: u64, methods: &[&str]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::numerical_example(seed);
    cfg.methods = methods.iter().map(|s| s.to_string()).collect();
    cfg.model = quick_model();
    cfg
}

pub fn parse_csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}
