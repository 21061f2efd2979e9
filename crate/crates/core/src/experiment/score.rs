//! Scoring new raw data with a saved model.

use std::path::Path;

use super::persist::SavedModel;
use super::pipeline::{load_series, standardize};
use super::report::{fmt4, render_series, write_file};
use crate::data::{CsvSchema, DataMatrix};
use crate::error::Result;
use crate::monitor::{detect, Detection, QualityReport};

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub rows: usize,
    /// Start of the faulty segment; `rows + 1` when the whole series is normal.
    pub fault_start: usize,
    pub detection: Detection,
}

/// Standardizes `data` with the saved scaler and evaluates it against the
/// saved control limits. Without `fault_start` every sample counts as normal.
pub fn score(saved: &SavedModel, data: &DataMatrix, fault_start: Option<usize>) -> Result<Scored> {
    let (x, y) = standardize(
        &saved.scaler,
        data,
        &saved.process_names,
        &saved.quality_names,
    )?;
    let rows = x.rows();
    let fault_start = fault_start.unwrap_or(rows + 1);
    let mut detection = detect(
        &saved.method,
        &x,
        y.as_ref(),
        &saved.thresholds,
        fault_start,
        QualityReport::IfAvailable,
    )?;
    for r in [&mut detection.process, &mut detection.quality]
        .into_iter()
        .flatten()
    {
        r.method = saved.method.id.to_string();
    }
    Ok(Scored {
        rows,
        fault_start,
        detection,
    })
}

/// Reads the model's columns from a CSV; quality columns may be absent.
pub fn score_csv(
    saved: &SavedModel,
    path: impl AsRef<Path>,
    fault_start: Option<usize>,
) -> Result<Scored> {
    let schema = CsvSchema::new(saved.process_names.clone(), saved.quality_names.clone());
    let data = load_series(path.as_ref(), &schema)?;
    score(saved, &data, fault_start)
}

/// Same layout as the series files of a run.
pub fn scored_series_csv(saved: &SavedModel, scored: &Scored) -> String {
    render_series(&saved.thresholds, &scored.detection.statistics, scored.rows)
}

pub fn write_scored_series(
    saved: &SavedModel,
    scored: &Scored,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), &scored_series_csv(saved, scored))
}

/// One line per evaluated subspace.
pub fn scored_summary(scored: &Scored) -> String {
    let mut out = String::new();
    for r in [&scored.detection.process, &scored.detection.quality]
        .into_iter()
        .flatten()
    {
        out.push_str(&format!(
            "{} {}: threshold {} FAR {} ({}/{}) FDR {} ({}/{})\n",
            r.method,
            r.subspace.label(),
            fmt4(r.threshold),
            fmt4(r.far),
            r.n_false_alarms,
            r.n_normal,
            fmt4(r.fdr),
            r.n_detections,
            r.n_faulty
        ));
    }
    out
}
