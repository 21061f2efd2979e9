//! REB, feature-noise sampling and the two training losses.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Training,
    Testing,
}

/// `n × v` draws from `N(0, sigma2)`. A zero variance returns zeros without
/// consuming the generator.
pub fn sample_noise<R: Rng + ?Sized>(
    sigma2: f64,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<Matrix> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::Contract(format!(
            "noise variance must be finite and non-negative, got {sigma2}"
        )));
    }
    if sigma2 == 0.0 {
        return Ok(Matrix::zeros(rows, cols));
    }
    let normal = Normal::new(0.0, sigma2.sqrt()).expect("positive finite std");
    Ok(Matrix::from_fn(rows, cols, |_, _| normal.sample(rng)))
}

/// Representation evaluation block: the student features at test time, the
/// teacher features plus the difference feedback during training.
pub fn reb(z_t: &Matrix, z_s: &Matrix, phase: Phase, d_f: &Matrix) -> Result<Matrix> {
    z_t.ensure_same_shape("reb", z_s)?;
    match phase {
        Phase::Testing => Ok(z_s.clone()),
        Phase::Training => z_t.add(d_f),
    }
}

/// Mean over rows of `‖z_t − z_s‖²`.
pub fn update_sigma2(z_t: &Matrix, z_s: &Matrix) -> Result<f64> {
    mean_squared_row_distance("update_sigma2", z_t, z_s)
}

/// Mimic loss of the student; numerically the same quantity as
/// [`update_sigma2`] with the teacher features as a fixed target.
pub fn student_loss(z_s: &Matrix, z_t: &Matrix) -> Result<f64> {
    mean_squared_row_distance("student_loss", z_s, z_t)
}

/// Mean over rows of `‖x_t − x̂_t‖²`.
pub fn reconstruction_loss(x_t: &Matrix, reconstruction: &Matrix) -> Result<f64> {
    mean_squared_row_distance("teacher_loss", x_t, reconstruction)
}

fn mean_squared_row_distance(op: &'static str, a: &Matrix, b: &Matrix) -> Result<f64> {
    a.ensure_same_shape(op, b)?;
    if a.rows() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut total = 0.0;
    for (ra, rb) in a.row_iter().zip(b.row_iter()) {
        total += ra
            .iter()
            .zip(rb)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>();
    }
    Ok(total / a.rows() as f64)
}
