//! Partial least squares by NIPALS.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const DEFAULT_MAX_COMPONENTS: usize = 10;
pub const DEFAULT_CV_FOLDS: usize = 5;
const NIPALS_TOLERANCE: f64 = 1e-12;
const NIPALS_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub(crate) x_means: Vec<f64>,
    pub(crate) x_scales: Vec<f64>,
    pub(crate) y_means: Vec<f64>,
    pub(crate) y_scales: Vec<f64>,
    /// `d × a` weights, loadings and `q × a` output loadings.
    pub(crate) weights: Matrix,
    pub(crate) x_loadings: Matrix,
    pub(crate) y_loadings: Matrix,
    /// `d × q` regression matrix in scaled coordinates.
    pub(crate) coefficients: Matrix,
}

impl PlsModel {
    pub fn components(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn x_loadings(&self) -> &Matrix {
        &self.x_loadings
    }

    pub fn y_loadings(&self) -> &Matrix {
        &self.y_loadings
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        predict_pls(self, x)
    }
}

struct Nipals {
    weights: Matrix,
    x_loadings: Matrix,
    y_loadings: Matrix,
    #[cfg_attr(not(test), allow(dead_code))]
    scores: Matrix,
    /// Residual X after each component.
    #[cfg_attr(not(test), allow(dead_code))]
    residuals: Vec<Matrix>,
}

fn scale_columns(data: &Matrix, prefix: &str) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let (n, d) = data.shape();
    let means = data.column_means();
    let mut scales = Vec::with_capacity(d);
    for j in 0..d {
        let var = (0..n)
            .map(|i| (data[(i, j)] - means[j]).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateColumn(format!("{prefix}{}", j + 1)));
        }
        scales.push(sd);
    }
    let scaled = Matrix::from_fn(n, d, |i, j| (data[(i, j)] - means[j]) / scales[j]);
    Ok((scaled, means, scales))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn nipals(x: &Matrix, y: &Matrix, components: usize) -> Result<Nipals> {
    let (n, d) = x.shape();
    let q = y.cols();
    let mut e = x.clone();
    let mut f = y.clone();
    let mut weights = Matrix::zeros(d, components);
    let mut x_loadings = Matrix::zeros(d, components);
    let mut y_loadings = Matrix::zeros(q, components);
    let mut scores = Matrix::zeros(n, components);
    let mut residuals = Vec::with_capacity(components);

    for a in 0..components {
        // Start from the output column with the largest remaining variance.
        let start = (0..q)
            .max_by(|&i, &j| {
                let si: f64 = f.column(i).iter().map(|v| v * v).sum();
                let sj: f64 = f.column(j).iter().map(|v| v * v).sum();
                si.total_cmp(&sj)
            })
            .unwrap_or(0);
        let mut u = f.column(start);
        let mut t = vec![0.0; n];
        let mut w = vec![0.0; d];
        let mut c = vec![0.0; q];
        for _ in 0..NIPALS_MAX_ITER {
            let u_mat = Matrix::column_vector(&u);
            w = e.transpose().matmul(&u_mat)?.into_vec();
            let wn = norm(&w);
            if !(wn > 1e-300) {
                return Err(Error::Singular(format!(
                    "PLS component {} has no remaining covariance",
                    a + 1
                )));
            }
            w.iter_mut().for_each(|v| *v /= wn);
            let t_new = e.matmul(&Matrix::column_vector(&w))?.into_vec();
            let tt: f64 = t_new.iter().map(|v| v * v).sum();
            c = f
                .transpose()
                .matmul(&Matrix::column_vector(&t_new))?
                .into_vec();
            c.iter_mut().for_each(|v| *v /= tt);
            let cc: f64 = c.iter().map(|v| v * v).sum();
            u = f.matmul(&Matrix::column_vector(&c))?.into_vec();
            u.iter_mut().for_each(|v| *v /= cc.max(f64::MIN_POSITIVE));
            let change = t_new
                .iter()
                .zip(&t)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            t = t_new;
            if change <= NIPALS_TOLERANCE * norm(&t).max(1.0) || q == 1 {
                break;
            }
        }
        let tt: f64 = t.iter().map(|v| v * v).sum();
        let t_mat = Matrix::column_vector(&t);
        let p: Vec<f64> = e
            .transpose()
            .matmul(&t_mat)?
            .into_vec()
            .into_iter()
            .map(|v| v / tt)
            .collect();
        let c: Vec<f64> = f
            .transpose()
            .matmul(&t_mat)?
            .into_vec()
            .into_iter()
            .map(|v| v / tt)
            .collect();
        e = e.sub(&t_mat.matmul(&Matrix::from_vec(1, d, p.clone())?)?)?;
        f = f.sub(&t_mat.matmul(&Matrix::from_vec(1, q, c.clone())?)?)?;
        for j in 0..d {
            weights[(j, a)] = w[j];
            x_loadings[(j, a)] = p[j];
        }
        for j in 0..q {
            y_loadings[(j, a)] = c[j];
        }
        for i in 0..n {
            scores[(i, a)] = t[i];
        }
        residuals.push(e.clone());
    }
    Ok(Nipals {
        weights,
        x_loadings,
        y_loadings,
        scores,
        residuals,
    })
}

/// NIPALS fit on internally standardized `x` and `y`.
pub fn fit_pls(x: &Matrix, y: &Matrix, components: usize) -> Result<PlsModel> {
    let (n, d) = x.shape();
    if y.rows() != n {
        return Err(Error::Shape {
            op: "fit_pls",
            left: x.shape(),
            right: y.shape(),
        });
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if components == 0 || components > d.min(n - 1) {
        return Err(Error::Config(format!(
            "PLS component count must lie in 1..={}, got {components}",
            d.min(n - 1)
        )));
    }
    let (xs, x_means, x_scales) = scale_columns(x, "x")?;
    let (ys, y_means, y_scales) = scale_columns(y, "y")?;
    let fit = nipals(&xs, &ys, components)?;

    // B = W (PᵀW)⁻¹ Cᵀ
    let w = to_na(&fit.weights);
    let ptw = to_na(&fit.x_loadings).transpose() * &w;
    let inv = ptw
        .try_inverse()
        .ok_or_else(|| Error::Singular("PLS loading/weight product".into()))?;
    let b = w * inv * to_na(&fit.y_loadings).transpose();
    let coefficients = Matrix::from_fn(d, y.cols(), |i, j| b[(i, j)]);
    Ok(PlsModel {
        x_means,
        x_scales,
        y_means,
        y_scales,
        weights: fit.weights,
        x_loadings: fit.x_loadings,
        y_loadings: fit.y_loadings,
        coefficients,
    })
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn predict_pls(model: &PlsModel, x: &Matrix) -> Result<Matrix> {
    let d = model.x_means.len();
    if x.cols() != d {
        return Err(Error::Shape {
            op: "predict_pls",
            left: (d, model.y_means.len()),
            right: x.shape(),
        });
    }
    let xs = Matrix::from_fn(x.rows(), d, |i, j| {
        (x[(i, j)] - model.x_means[j]) / model.x_scales[j]
    });
    let ys = xs.matmul(&model.coefficients)?;
    Ok(Matrix::from_fn(ys.rows(), ys.cols(), |i, j| {
        ys[(i, j)] * model.y_scales[j] + model.y_means[j]
    }))
}

/// Contiguous fold boundaries `[start, end)`.
pub(crate) fn fold_ranges(n: usize, folds: usize) -> Vec<(usize, usize)> {
    (0..folds)
        .map(|k| (k * n / folds, (k + 1) * n / folds))
        .collect()
}

pub(crate) fn split_fold(data: &Matrix, (start, end): (usize, usize)) -> (Matrix, Matrix) {
    let train: Vec<usize> = (0..data.rows())
        .filter(|i| *i < start || *i >= end)
        .collect();
    let test: Vec<usize> = (start..end).collect();
    (
        data.select_rows(&train).expect("rows in range"),
        data.select_rows(&test).expect("rows in range"),
    )
}

/// Component count in `1..=max_components` with the lowest `folds`-fold
/// cross-validated squared prediction error.
pub fn select_pls_components(
    x: &Matrix,
    y: &Matrix,
    max_components: usize,
    folds: usize,
) -> Result<usize> {
    let n = x.rows();
    if folds < 2 || n < 2 * folds {
        return Err(Error::InsufficientData {
            needed: 2 * folds.max(2),
            got: n,
        });
    }
    let smallest_train = n - fold_ranges(n, folds)
        .iter()
        .map(|(a, b)| b - a)
        .max()
        .unwrap_or(0);
    let cap = max_components.min(x.cols()).min(smallest_train - 1).max(1);
    let mut press = vec![0.0; cap];
    for range in fold_ranges(n, folds) {
        let (x_train, x_test) = split_fold(x, range);
        let (y_train, y_test) = split_fold(y, range);
        for (a, total) in press.iter_mut().enumerate() {
            let model = fit_pls(&x_train, &y_train, a + 1)?;
            *total += model.predict(&x_test)?.sub(&y_test)?.frobenius_squared();
        }
    }
    let best = (0..cap)
        .min_by(|&a, &b| press[a].total_cmp(&press[b]))
        .unwrap_or(0);
    Ok(best + 1)
}
