//! Offline modelling and online monitoring for one experiment.

use std::time::Instant;

use crate::baselines::{fit_method, FittedMethod, MethodId};
use crate::data::{
    generate_benchmark, inject_fault, load_csv, CsvSchema, DataMatrix, FaultSpec, Role, Scaler,
};
use crate::error::{Error, Result};
use crate::monitor::{detect, fit_thresholds, Detection, QualityReport, Subspace, ThresholdPair};
use crate::numcore::Matrix;

use super::config::{DataConfig, ExperimentConfig, FaultUnits};

/// A monitoring series, standardized with the training statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSeries {
    pub name: String,
    /// 1-based index of the first faulty sample.
    pub start: usize,
    /// Subspace of the injected step, when known.
    pub subspace: Option<Subspace>,
    pub raw: DataMatrix,
    pub x: Matrix,
    pub y: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub scaler: Scaler,
    pub process_names: Vec<String>,
    pub quality_names: Vec<String>,
    pub train_raw: DataMatrix,
    pub train_x: Matrix,
    pub train_y: Matrix,
    pub faults: Vec<FaultSeries>,
}

impl PreparedData {
    pub fn fault(&self, name: &str) -> Result<&FaultSeries> {
        self.faults
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Config(format!("unknown fault `{name}`")))
    }
}

/// Standardizes the named columns of `data` with `scaler`; quality columns
/// are `None` when `data` has none.
pub fn standardize(
    scaler: &Scaler,
    data: &DataMatrix,
    process: &[String],
    quality: &[String],
) -> Result<(Matrix, Option<Matrix>)> {
    let pick = |names: &[String]| -> Result<Matrix> {
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let j = data
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("series lacks column `{name}`")))?;
            let k = scaler
                .names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Schema(format!("scaler lacks column `{name}`")))?;
            cols.push((j, scaler.means()[k], scaler.stds()[k]));
        }
        Ok(Matrix::from_fn(data.rows(), cols.len(), |i, c| {
            let (j, m, s) = cols[c];
            (data.values()[(i, j)] - m) / s
        }))
    };
    let x = pick(process)?;
    let has_quality = !quality.is_empty() && quality.iter().all(|q| data.column_index(q).is_some());
    let y = if has_quality {
        Some(pick(quality)?)
    } else {
        None
    };
    Ok((x, y))
}

/// Loads a CSV series; quality columns are optional.
pub(crate) fn load_series(path: &std::path::Path, schema: &CsvSchema) -> Result<DataMatrix> {
    match load_csv(path, schema) {
        Err(Error::Schema(_)) if !schema.quality.is_empty() => load_csv(
            path,
            &CsvSchema::new(schema.process.clone(), Vec::<String>::new()),
        ),
        other => other,
    }
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let (train, monitor): (DataMatrix, Vec<DataMatrix>) = match &cfg.data {
        DataConfig::Generator { .. } => {
            let spec = cfg.generator_spec().expect("generator source");
            let series = generate_benchmark(&spec, cfg.faults.len())?;
            (series.train, series.monitor)
        }
        DataConfig::Csv { train, .. } => {
            let schema = cfg.csv_schema().expect("csv source");
            let train = load_csv(train, &schema)?;
            let mut monitor = Vec::with_capacity(cfg.faults.len());
            for f in &cfg.faults {
                let path = f.file.as_ref().expect("validated: csv faults have files");
                monitor.push(load_series(path, &schema)?);
            }
            (train, monitor)
        }
    };
    let process_names = train.process_names();
    let quality_names = train.quality_names();
    if quality_names.is_empty() {
        return Err(Error::Schema("training data has no quality columns".into()));
    }
    let ordered: Vec<&str> = process_names
        .iter()
        .chain(&quality_names)
        .map(String::as_str)
        .collect();
    let train = train.select_columns(&ordered)?;
    let scaler = Scaler::fit(&train)?;
    let (train_x, train_y) = standardize(&scaler, &train, &process_names, &quality_names)?;
    let train_y = train_y.expect("training data has quality columns");

    let mut faults = Vec::with_capacity(cfg.faults.len());
    for (fc, series) in cfg.faults.iter().zip(monitor) {
        let mut raw = series;
        let mut subspace = fc.declared_subspace()?;
        if let Some(spec) = fc.spec()? {
            let col = spec.column(&raw)?;
            let name = raw.names()[col].clone();
            subspace = Some(match raw.roles()[col] {
                Role::Process => Subspace::Process,
                Role::Quality => Subspace::Quality,
            });
            let magnitude = match fc.units {
                FaultUnits::Raw => spec.magnitude,
                FaultUnits::Std => {
                    spec.magnitude
                        * scaler.std_of(&name).ok_or_else(|| {
                            Error::Schema(format!("fault column `{name}` is not modelled"))
                        })?
                }
            };
            raw = inject_fault(
                &raw,
                &FaultSpec::step(spec.target.clone(), magnitude, spec.start_index),
            )?;
        }
        if fc.start > raw.rows() + 1 {
            return Err(Error::Config(format!(
                "fault `{}` starts at {} but the series has {} samples",
                fc.name,
                fc.start,
                raw.rows()
            )));
        }
        let (x, y) = standardize(&scaler, &raw, &process_names, &quality_names)?;
        faults.push(FaultSeries {
            name: fc.name.clone(),
            start: fc.start,
            subspace,
            raw,
            x,
            y,
        });
    }
    Ok(PreparedData {
        scaler,
        process_names,
        quality_names,
        train_raw: train,
        train_x,
        train_y,
        faults,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultOutcome {
    pub fault: String,
    pub detection: Detection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRun {
    pub id: MethodId,
    pub fitted: FittedMethod,
    pub thresholds: ThresholdPair,
    pub outcomes: Vec<FaultOutcome>,
    pub train_seconds: f64,
}

impl MethodRun {
    pub fn outcome(&self, fault: &str) -> Option<&FaultOutcome> {
        self.outcomes.iter().find(|o| o.fault == fault)
    }
}

/// Fits one method on the standardized training data, sets its control
/// limits from the training statistics and monitors every fault series.
pub fn run_method(id: MethodId, data: &PreparedData, cfg: &ExperimentConfig) -> Result<MethodRun> {
    let mut settings = cfg.settings_for(id)?;
    settings.model.m = data.train_x.cols();
    settings.model.p = data.train_y.cols();
    let started = Instant::now();
    let fitted = fit_method(id, &data.train_x, &data.train_y, &settings)?;
    let train_seconds = started.elapsed().as_secs_f64();
    let thresholds = fit_thresholds(&fitted, &data.train_x, &data.train_y, cfg.confidence)?;
    monitor_faults(fitted, thresholds, data, train_seconds)
}

pub(crate) fn monitor_faults(
    fitted: FittedMethod,
    thresholds: ThresholdPair,
    data: &PreparedData,
    train_seconds: f64,
) -> Result<MethodRun> {
    let id = fitted.id;
    let mut outcomes = Vec::with_capacity(data.faults.len());
    for f in &data.faults {
        let mut detection = detect(
            &fitted,
            &f.x,
            f.y.as_ref(),
            &thresholds,
            f.start,
            QualityReport::IfAvailable,
        )?;
        for r in [&mut detection.process, &mut detection.quality]
            .into_iter()
            .flatten()
        {
            r.method = id.to_string();
            r.fault = f.name.clone();
        }
        outcomes.push(FaultOutcome {
            fault: f.name.clone(),
            detection,
        });
    }
    Ok(MethodRun {
        id,
        fitted,
        thresholds,
        outcomes,
        train_seconds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub data: PreparedData,
    pub methods: Vec<MethodRun>,
}

impl ExperimentRun {
    pub fn method(&self, id: MethodId) -> Result<&MethodRun> {
        self.methods
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::UnknownMethod(id.to_string()))
    }
}

/// All configured methods, in memory and without writing files.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let data = prepare_data(cfg).map_err(|e| e.in_stage("data"))?;
    let mut methods = Vec::new();
    for id in cfg.method_ids()? {
        methods.push(run_method(id, &data, cfg).map_err(|e| e.in_stage(format!("method {id}")))?);
    }
    Ok(ExperimentRun { data, methods })
}

/// One TSSAE-with-negative-feedback run per rate.
pub fn sweep_negative_feedback(
    data: &PreparedData,
    k_values: &[f64],
    cfg: &ExperimentConfig,
) -> Result<Vec<MethodRun>> {
    if k_values.is_empty() {
        return Err(Error::Config(
            "negative feedback sweep needs at least one rate".into(),
        ));
    }
    k_values
        .iter()
        .map(|&k| {
            run_method(MethodId::TssaeNf(k), data, cfg)
                .map_err(|e| e.in_stage(format!("sweep k={k}")))
        })
        .collect()
}
