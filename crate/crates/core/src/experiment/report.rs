//! Metrics tables, series files and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{DataConfig, ExperimentConfig};
use super::persist::{save_model, SavedModel};
use super::pipeline::{
    prepare_data, run_method, sweep_negative_feedback, ExperimentRun, MethodRun, PreparedData,
};
use crate::baselines::MethodId;
use crate::data::write_csv;
use crate::error::{Error, Result};
use crate::monitor::{DetectionReport, Statistics, Subspace, ThresholdPair};

/// Four decimals, the precision of the reference tables.
pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn reports(run: &MethodRun) -> impl Iterator<Item = &DetectionReport> {
    run.outcomes
        .iter()
        .flat_map(|o| [o.detection.process.as_ref(), o.detection.quality.as_ref()])
        .flatten()
}

/// One row per method × fault × modelled subspace.
pub fn metrics_csv(methods: &[MethodRun]) -> String {
    let mut out = String::from(
        "method,fault,subspace,threshold,n_normal,n_faulty,n_false_alarms,n_detections,far,fdr\n",
    );
    for run in methods {
        for r in reports(run) {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.method,
                r.fault,
                r.subspace.label(),
                fmt4(r.threshold),
                r.n_normal,
                r.n_faulty,
                r.n_false_alarms,
                r.n_detections,
                fmt4(r.far),
                fmt4(r.fdr)
            )
            .expect("string write");
        }
    }
    out
}

pub fn thresholds_csv(methods: &[MethodRun]) -> String {
    let mut out = String::from("method,J_x_th,J_y_th,confidence\n");
    let cell = |v: Option<f64>| v.map_or("/".to_string(), fmt4);
    for run in methods {
        writeln!(
            out,
            "{},{},{},{}",
            run.id,
            cell(run.thresholds.process),
            cell(run.thresholds.quality),
            run.thresholds.confidence
        )
        .expect("string write");
    }
    out
}

/// Aligned FAR/FDR table: rows fault × rate, columns method × subspace;
/// a subspace the method does not model shows `/`, a missing report `-`.
pub fn comparison_table(methods: &[MethodRun], faults: &[String]) -> String {
    let mut header = vec!["fault".to_string(), "rate".to_string()];
    for run in methods {
        for s in [Subspace::Process, Subspace::Quality] {
            header.push(format!("{} {}", run.id, s.label()));
        }
    }
    let mut rows = vec![header];
    for fault in faults {
        for rate in ["FAR", "FDR"] {
            let mut row = vec![fault.clone(), rate.to_string()];
            for run in methods {
                for s in [Subspace::Process, Subspace::Quality] {
                    let cell = if !run.id.models(s) {
                        "/".to_string()
                    } else {
                        let report = run.outcome(fault).and_then(|o| match s {
                            Subspace::Process => o.detection.process.as_ref(),
                            Subspace::Quality => o.detection.quality.as_ref(),
                        });
                        match report {
                            Some(r) => fmt4(if rate == "FAR" { r.far } else { r.fdr }),
                            None => "-".to_string(),
                        }
                    };
                    row.push(cell);
                }
            }
            rows.push(row);
        }
    }
    align(&rows)
}

fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(String::len)
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{v:>w$}", w = widths[c]))
            .collect();
        writeln!(out, "{}", cells.join("  ").trim_end()).expect("string write");
    }
    out
}

/// `sample_index, D_x, J_x_th, D_y, J_y_th`; cells for an unmodelled
/// subspace are empty.
pub fn series_csv(run: &ExperimentRun, fault: &str, method: MethodId) -> Result<String> {
    let m = run.method(method)?;
    let series = run.data.fault(fault)?;
    let outcome = m.outcome(fault).ok_or_else(|| {
        Error::Config(format!("method {method} has no result for fault `{fault}`"))
    })?;
    Ok(render_series(
        &m.thresholds,
        &outcome.detection.statistics,
        series.x.rows(),
    ))
}

pub(crate) fn render_series(thresholds: &ThresholdPair, stats: &Statistics, rows: usize) -> String {
    let dx = stats.process.as_ref().map(|s| &s.values[..]);
    let dy = stats.quality.as_ref().map(|s| &s.values[..]);
    let mut out = String::from("sample_index,D_x,J_x_th,D_y,J_y_th\n");
    let value = |s: Option<&[f64]>, i: usize| s.map_or(String::new(), |s| format!("{:?}", s[i]));
    let limit = |s: Option<&[f64]>, j: Option<f64>| match (s, j) {
        (Some(_), Some(j)) => format!("{j:?}"),
        _ => String::new(),
    };
    for i in 0..rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            value(dx, i),
            limit(dx, thresholds.process),
            value(dy, i),
            limit(dy, thresholds.quality)
        )
        .expect("string write");
    }
    out
}

pub fn emit_series(
    run: &ExperimentRun,
    fault: &str,
    method: MethodId,
    path: impl AsRef<Path>,
) -> Result<()> {
    let text = series_csv(run, fault, method)?;
    write_file(path.as_ref(), &text)
}

/// File-name form of a method id (`tssae-nf:0.1` → `tssae-nf_0.1`).
pub fn method_slug(id: MethodId) -> String {
    id.to_string().replace(':', "_")
}

/// Negative-feedback table: per rate, FDR and threshold of each fault in
/// the subspace of its injected variable.
pub fn sweep_csv(runs: &[MethodRun], data: &PreparedData) -> String {
    let mut out = String::from("k,fault,subspace,far,fdr,threshold\n");
    for run in runs {
        let k = match run.id {
            MethodId::TssaeNf(k) => k,
            _ => continue,
        };
        for f in &data.faults {
            let Some(o) = run.outcome(&f.name) else {
                continue;
            };
            let subspace = f.subspace.unwrap_or(Subspace::Process);
            let report = match subspace {
                Subspace::Process => o.detection.process.as_ref(),
                Subspace::Quality => o.detection.quality.as_ref(),
            };
            if let Some(r) = report {
                writeln!(
                    out,
                    "{k},{},{},{},{},{}",
                    f.name,
                    subspace.label(),
                    fmt4(r.far),
                    fmt4(r.fdr),
                    fmt4(r.threshold)
                )
                .expect("string write");
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub status: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    /// SHA-256 over the canonical config and every input CSV.
    pub input_hash: String,
    /// Relative paths of every file written, in write order.
    pub files: Vec<String>,
    pub models: BTreeMap<String, String>,
    pub timings_seconds: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
}

pub fn input_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut h = Sha256::new();
    h.update(cfg.to_toml().as_bytes());
    let mut files: Vec<&PathBuf> = cfg.faults.iter().filter_map(|f| f.file.as_ref()).collect();
    if let DataConfig::Csv { train, .. } = &cfg.data {
        files.insert(0, train);
    }
    for path in files {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Writer<'a> {
    root: &'a Path,
    manifest: RunManifest,
}

impl Writer<'_> {
    fn write(&mut self, rel: &str, text: &str) -> Result<()> {
        write_file(&self.root.join(rel), text)?;
        self.manifest.files.push(rel.to_string());
        Ok(())
    }

    fn finish(mut self, outcome: Result<()>) -> Result<RunManifest> {
        let result = match outcome {
            Ok(()) => {
                self.manifest.status = "complete".into();
                Ok(())
            }
            Err(e) => {
                self.manifest.status = "failed".into();
                if let Error::Stage { stage, source } = &e {
                    self.manifest.failed_stage = Some(stage.clone());
                    self.manifest.error = Some(source.to_string());
                } else {
                    self.manifest.error = Some(e.to_string());
                }
                Err(e)
            }
        };
        let text = toml::to_string(&self.manifest).expect("manifest serializes");
        write_file(&self.root.join("manifest.toml"), &text)?;
        result.map(|_| self.manifest)
    }
}

fn new_writer<'a>(cfg: &ExperimentConfig, out: &'a Path) -> Result<Writer<'a>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    Ok(Writer {
        root: out,
        manifest: RunManifest {
            status: "running".into(),
            failed_stage: None,
            error: None,
            input_hash: input_hash(cfg)?,
            files: Vec::new(),
            models: BTreeMap::new(),
            timings_seconds: BTreeMap::new(),
            config: cfg.clone(),
        },
    })
}

fn save_method(w: &mut Writer<'_>, run: &MethodRun, data: &PreparedData) -> Result<()> {
    let rel = format!("models/{}.model", method_slug(run.id));
    let saved = SavedModel {
        method: run.fitted.clone(),
        scaler: data.scaler.clone(),
        process_names: data.process_names.clone(),
        quality_names: data.quality_names.clone(),
        thresholds: run.thresholds,
    };
    let path = w.root.join(&rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_model(&saved, &path)?;
    w.manifest.files.push(rel.clone());
    w.manifest.models.insert(run.id.to_string(), rel);
    Ok(())
}

/// Runs every configured method and writes `metrics.csv`, `table.txt`,
/// `thresholds.csv`, `series/<fault>__<method>.csv`, `models/<method>.model`
/// and `manifest.toml` under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: impl AsRef<Path>) -> Result<RunManifest> {
    cfg.validate()?;
    let mut w = new_writer(cfg, out.as_ref())?;
    let outcome = (|| -> Result<()> {
        let started = Instant::now();
        let data = prepare_data(cfg).map_err(|e| e.in_stage("data"))?;
        w.manifest
            .timings_seconds
            .insert("data".into(), started.elapsed().as_secs_f64());
        let mut runs = Vec::new();
        for id in cfg.method_ids()? {
            let stage = format!("method {id}");
            let started = Instant::now();
            let run = run_method(id, &data, cfg).map_err(|e| e.in_stage(&stage))?;
            w.manifest
                .timings_seconds
                .insert(id.to_string(), started.elapsed().as_secs_f64());
            save_method(&mut w, &run, &data).map_err(|e| e.in_stage(&stage))?;
            runs.push(run);
        }
        let run = ExperimentRun {
            data,
            methods: runs,
        };
        let fault_names: Vec<String> = run.data.faults.iter().map(|f| f.name.clone()).collect();
        (|| -> Result<()> {
            w.write("metrics.csv", &metrics_csv(&run.methods))?;
            w.write("thresholds.csv", &thresholds_csv(&run.methods))?;
            w.write("table.txt", &comparison_table(&run.methods, &fault_names))?;
            for fault in &fault_names {
                for m in &run.methods {
                    let rel = format!("series/{fault}__{}.csv", method_slug(m.id));
                    w.write(&rel, &series_csv(&run, fault, m.id)?)?;
                }
            }
            Ok(())
        })()
        .map_err(|e| e.in_stage("write"))
    })();
    w.finish(outcome)
}

/// Runs the negative-feedback grid (the config's `nf_grid`, or `k_values`
/// when given) and writes `sweep.csv`, `sweep_table.txt` and the manifest.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    k_values: Option<&[f64]>,
    out: impl AsRef<Path>,
) -> Result<RunManifest> {
    cfg.validate()?;
    let grid: Vec<f64> = k_values
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| cfg.nf_grid.clone());
    let mut w = new_writer(cfg, out.as_ref())?;
    let outcome = (|| -> Result<()> {
        let data = prepare_data(cfg).map_err(|e| e.in_stage("data"))?;
        let started = Instant::now();
        let runs = sweep_negative_feedback(&data, &grid, cfg)?;
        w.manifest
            .timings_seconds
            .insert("sweep".into(), started.elapsed().as_secs_f64());
        (|| -> Result<()> {
            w.write("sweep.csv", &sweep_csv(&runs, &data))?;
            w.write("sweep_table.txt", &sweep_table(&runs, &data))
        })()
        .map_err(|e| e.in_stage("write"))
    })();
    w.finish(outcome)
}

/// Writes the prepared training series and every (fault-injected) monitoring
/// series as raw CSV under `out`, plus `experiment.toml`: the same experiment
/// reading those files. Returns that config.
pub fn write_benchmark(cfg: &ExperimentConfig, out: impl AsRef<Path>) -> Result<ExperimentConfig> {
    cfg.validate()?;
    let out = out.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let data = prepare_data(cfg).map_err(|e| e.in_stage("data"))?;
    let path = out.join("train.csv");
    write_csv(&path, &data.train_raw)?;
    let mut csv_cfg = cfg.clone();
    csv_cfg.data = DataConfig::Csv {
        train: PathBuf::from("train.csv"),
        process: data.process_names.clone(),
        quality: data.quality_names.clone(),
    };
    for (fc, series) in csv_cfg.faults.iter_mut().zip(&data.faults) {
        let rel = format!("{}.csv", fc.name);
        write_csv(out.join(&rel), &series.raw)?;
        fc.file = Some(PathBuf::from(rel));
        fc.target = None;
        fc.magnitude = 0.0;
        fc.subspace = series.subspace.map(|s| match s {
            Subspace::Process => "process".to_string(),
            Subspace::Quality => "quality".to_string(),
        });
    }
    write_file(&out.join("experiment.toml"), &csv_cfg.to_toml())?;
    csv_cfg.resolve_paths(out);
    Ok(csv_cfg)
}

/// Rates as rows; per fault, the FDR and the control limit of the fault's subspace.
pub fn sweep_table(runs: &[MethodRun], data: &PreparedData) -> String {
    let mut header = vec!["k".to_string()];
    for f in &data.faults {
        let s = f.subspace.unwrap_or(Subspace::Process).label();
        header.push(format!("{} FDR", f.name));
        header.push(format!("{} J_th({s})", f.name));
    }
    let mut rows = vec![header];
    for run in runs {
        let MethodId::TssaeNf(k) = run.id else {
            continue;
        };
        let mut row = vec![format!("{k}")];
        for f in &data.faults {
            let s = f.subspace.unwrap_or(Subspace::Process);
            let r = run.outcome(&f.name).and_then(|o| match s {
                Subspace::Process => o.detection.process.as_ref(),
                Subspace::Quality => o.detection.quality.as_ref(),
            });
            match r {
                Some(r) => {
                    row.push(fmt4(r.fdr));
                    row.push(fmt4(r.threshold));
                }
                None => row.extend(["-".to_string(), "-".to_string()]),
            }
        }
        rows.push(row);
    }
    align(&rows)
}
