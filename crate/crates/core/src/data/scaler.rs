use super::table::DataMatrix;
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Per-column z-score statistics from a training table (sample standard
/// deviation, `n − 1` denominator).
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    names: Vec<String>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(train: &DataMatrix) -> Result<Self> {
        let n = train.rows();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        let values = train.values();
        let means = values.column_means();
        let mut stds = vec![0.0; values.cols()];
        for row in values.row_iter() {
            for ((s, &v), &m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (j, s) in stds.iter_mut().enumerate() {
            *s = (*s / (n - 1) as f64).sqrt();
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::DegenerateColumn(train.names()[j].clone()));
            }
        }
        Ok(Self {
            names: train.names().to_vec(),
            means,
            stds,
        })
    }

    pub fn from_parts(names: Vec<String>, means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        if names.len() != means.len() || names.len() != stds.len() {
            return Err(Error::Format(
                "scaler names, means and stds differ in length".into(),
            ));
        }
        if let Some(j) = stds.iter().position(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::DegenerateColumn(names[j].clone()));
        }
        Ok(Self { names, means, stds })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn std_of(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.stds[j])
    }

    fn check(&self, data: &DataMatrix) -> Result<()> {
        if data.names() != self.names.as_slice() {
            return Err(Error::Schema(format!(
                "scaler fitted on columns {:?}, data has {:?}",
                self.names,
                data.names()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.check(data)?;
        data.with_values(self.apply_matrix(data.values())?)
    }

    pub fn inverse(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.check(data)?;
        data.with_values(self.inverse_matrix(data.values())?)
    }

    pub fn apply_matrix(&self, values: &Matrix) -> Result<Matrix> {
        self.map_columns(values, |v, m, s| (v - m) / s)
    }

    pub fn inverse_matrix(&self, values: &Matrix) -> Result<Matrix> {
        self.map_columns(values, |v, m, s| v * s + m)
    }

    fn map_columns(&self, values: &Matrix, f: impl Fn(f64, f64, f64) -> f64) -> Result<Matrix> {
        if values.cols() != self.means.len() {
            return Err(Error::Shape {
                op: "scaler",
                left: (1, self.means.len()),
                right: values.shape(),
            });
        }
        Ok(Matrix::from_fn(values.rows(), values.cols(), |i, j| {
            f(values[(i, j)], self.means[j], self.stds[j])
        }))
    }
}
