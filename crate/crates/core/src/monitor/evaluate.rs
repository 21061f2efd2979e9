use super::statistic::{StatisticSeries, Subspace};
use crate::error::{Error, Result};

/// False-alarm and detection counts for one monitored series.
///
/// Samples before the fault start are normal, the rest faulty; a sample
/// raises an alarm when its statistic is strictly above the threshold.
/// A rate with an empty denominator is reported as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub method: String,
    pub fault: String,
    pub subspace: Subspace,
    pub threshold: f64,
    pub n_normal: usize,
    pub n_faulty: usize,
    pub n_false_alarms: usize,
    pub n_detections: usize,
    pub far: f64,
    pub fdr: f64,
}

impl DetectionReport {
    pub fn labelled(mut self, method: impl Into<String>, fault: impl Into<String>) -> Self {
        self.method = method.into();
        self.fault = fault.into();
        self
    }
}

/// `fault_start` is the 1-based index of the first faulty sample.
pub fn evaluate(
    series: &StatisticSeries,
    threshold: f64,
    fault_start: usize,
) -> Result<DetectionReport> {
    let n = series.len();
    if fault_start == 0 || fault_start > n + 1 {
        return Err(Error::Contract(format!(
            "fault start {fault_start} outside 1..={} for a series of {n} samples",
            n + 1
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::NonFinite(format!("threshold {threshold}")));
    }
    let split = fault_start - 1;
    let (normal, faulty) = series.values.split_at(split);
    let n_false_alarms = normal.iter().filter(|&&v| v > threshold).count();
    let n_detections = faulty.iter().filter(|&&v| v > threshold).count();
    let rate = |k: usize, d: usize| if d == 0 { 0.0 } else { k as f64 / d as f64 };
    Ok(DetectionReport {
        method: String::new(),
        fault: String::new(),
        subspace: series.subspace,
        threshold,
        n_normal: normal.len(),
        n_faulty: faulty.len(),
        n_false_alarms,
        n_detections,
        far: rate(n_false_alarms, normal.len()),
        fdr: rate(n_detections, faulty.len()),
    })
}
