use super::table::{DataMatrix, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FaultTarget {
    /// 1-based index among the process columns.
    Process(usize),
    /// 1-based index among the quality columns.
    Quality(usize),
    Named(String),
}

/// Step fault: `magnitude` is added to the target column from sample
/// `start_index` (1-based) to the end of the series.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSpec {
    pub target: FaultTarget,
    pub magnitude: f64,
    pub start_index: usize,
}

impl FaultSpec {
    pub fn step(target: FaultTarget, magnitude: f64, start_index: usize) -> Self {
        Self {
            target,
            magnitude,
            start_index,
        }
    }

    pub fn column(&self, data: &DataMatrix) -> Result<usize> {
        let pick = |role: Role, k: usize| {
            let idx: Vec<usize> = (0..data.cols())
                .filter(|&j| data.roles()[j] == role)
                .collect();
            k.checked_sub(1)
                .and_then(|k| idx.get(k).copied())
                .ok_or_else(|| Error::Schema(format!("no {role:?} column number {k}")))
        };
        match &self.target {
            FaultTarget::Process(k) => pick(Role::Process, *k),
            FaultTarget::Quality(k) => pick(Role::Quality, *k),
            FaultTarget::Named(name) => data
                .column_index(name)
                .ok_or_else(|| Error::Schema(format!("unknown fault column `{name}`"))),
        }
    }
}

pub fn inject_fault(series: &DataMatrix, fault: &FaultSpec) -> Result<DataMatrix> {
    let col = fault.column(series)?;
    if fault.start_index == 0 || fault.start_index > series.rows() {
        return Err(Error::Config(format!(
            "fault start {} outside series of {} samples",
            fault.start_index,
            series.rows()
        )));
    }
    if !fault.magnitude.is_finite() {
        return Err(Error::Config(format!(
            "fault magnitude {} is not finite",
            fault.magnitude
        )));
    }
    let mut values = series.values().clone();
    if fault.magnitude != 0.0 {
        for i in fault.start_index - 1..values.rows() {
            values[(i, col)] += fault.magnitude;
        }
    }
    series.with_values(values)
}
