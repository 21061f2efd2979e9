use nalgebra::{DMatrix, SVD};

use super::pls::{fold_ranges, split_fold};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const DEFAULT_LAMBDA_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2];
/// Condition threshold under which an unregularized design counts as singular.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// `d × q`.
    pub(crate) coefficients: Matrix,
    pub(crate) intercept: Vec<f64>,
    pub(crate) lambda: f64,
}

impl RidgeModel {
    pub fn coefficients(&self) -> &Matrix {
        &self.coefficients
    }

    pub fn intercept(&self) -> &[f64] {
        &self.intercept
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        predict_rr(self, x)
    }
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn solve(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "ridge lambda must be finite and non-negative, got {lambda}"
        )));
    }
    let d = x.ncols();
    if lambda == 0.0 {
        let sv = SVD::new(x.clone(), false, false).singular_values;
        let max = sv.max();
        let min = if sv.len() < d { 0.0 } else { sv.min() };
        if !(min > RANK_TOLERANCE * max) {
            return Err(Error::Singular(format!(
                "unregularized ridge on a rank-deficient design (smallest singular value {min:e})"
            )));
        }
    }
    let gram = x.transpose() * x + DMatrix::identity(d, d) * lambda;
    let rhs = x.transpose() * y;
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular("ridge normal equations are not positive definite".into())
    })?;
    Ok(chol.solve(&rhs))
}

fn check_rows(x: &Matrix, y: &Matrix) -> Result<()> {
    if x.rows() != y.rows() {
        return Err(Error::Shape {
            op: "fit_rr",
            left: x.shape(),
            right: y.shape(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.rows(),
        });
    }
    Ok(())
}

/// Solves `(XcᵀXc + λI) B = XcᵀYc` on column-centered data; the intercept
/// restores the means.
pub fn fit_rr(x: &Matrix, y: &Matrix, lambda: f64) -> Result<RidgeModel> {
    check_rows(x, y)?;
    let xm = x.column_means();
    let ym = y.column_means();
    let xc = DMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] - xm[j]);
    let yc = DMatrix::from_fn(y.rows(), y.cols(), |i, j| y[(i, j)] - ym[j]);
    let b = solve(&xc, &yc, lambda)?;
    let coefficients = Matrix::from_fn(x.cols(), y.cols(), |i, j| b[(i, j)]);
    let intercept = (0..y.cols())
        .map(|j| ym[j] - (0..x.cols()).map(|i| xm[i] * b[(i, j)]).sum::<f64>())
        .collect();
    Ok(RidgeModel {
        coefficients,
        intercept,
        lambda,
    })
}

/// `B = (XᵀX + λI)⁻¹XᵀY` with no intercept.
pub fn fit_rr_uncentered(x: &Matrix, y: &Matrix, lambda: f64) -> Result<RidgeModel> {
    check_rows(x, y)?;
    let b = solve(&to_na(x), &to_na(y), lambda)?;
    Ok(RidgeModel {
        coefficients: Matrix::from_fn(x.cols(), y.cols(), |i, j| b[(i, j)]),
        intercept: vec![0.0; y.cols()],
        lambda,
    })
}

pub fn predict_rr(model: &RidgeModel, x: &Matrix) -> Result<Matrix> {
    let mut out = x.matmul(&model.coefficients)?;
    for i in 0..out.rows() {
        for (v, b) in out.row_mut(i).iter_mut().zip(&model.intercept) {
            *v += b;
        }
    }
    Ok(out)
}

/// λ from `grid` with the lowest `folds`-fold cross-validated squared error;
/// ties go to the larger λ.
pub fn select_ridge_lambda(x: &Matrix, y: &Matrix, grid: &[f64], folds: usize) -> Result<f64> {
    check_rows(x, y)?;
    if grid.is_empty() {
        return Err(Error::Config("ridge lambda grid is empty".into()));
    }
    let n = x.rows();
    if folds < 2 || n < 2 * folds {
        return Err(Error::InsufficientData {
            needed: 2 * folds.max(2),
            got: n,
        });
    }
    let mut best = (f64::INFINITY, grid[0]);
    for &lambda in grid {
        let mut press = 0.0;
        for range in fold_ranges(n, folds) {
            let (x_train, x_test) = split_fold(x, range);
            let (y_train, y_test) = split_fold(y, range);
            let model = fit_rr(&x_train, &y_train, lambda)?;
            press += model.predict(&x_test)?.sub(&y_test)?.frobenius_squared();
        }
        if press < best.0 || (press == best.0 && lambda > best.1) {
            best = (press, lambda);
        }
    }
    Ok(best.1)
}
