use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subspace {
    Process,
    Quality,
}

impl Subspace {
    pub fn label(&self) -> &'static str {
        match self {
            Subspace::Process => "Dx",
            Subspace::Quality => "Dy",
        }
    }
}

/// Per-sample squared error `‖prediction − actual‖²` in one subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticSeries {
    pub subspace: Subspace,
    pub values: Vec<f64>,
}

impl StatisticSeries {
    pub fn new(subspace: Subspace, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::NonFinite(format!(
                "statistic value {v} is not a finite non-negative number"
            )));
        }
        Ok(Self { subspace, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn statistic_series(
    actual: &Matrix,
    predicted: &Matrix,
    subspace: Subspace,
) -> Result<StatisticSeries> {
    let diff = predicted.sub(actual)?;
    StatisticSeries::new(subspace, diff.row_squared_norms())
}
