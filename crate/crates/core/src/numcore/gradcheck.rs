//! Central finite-difference gradient checker.

use crate::error::{Error, Result};

/// Components whose gradients are both below this magnitude are compared on
/// an absolute scale; otherwise round-off in the loss dominates the quotient.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Index of the parameter with the largest deviation.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub passed: bool,
}

/// Compares `analytic` against `(L(θ + h e_i) − L(θ − h e_i)) / 2h` for every
/// parameter. The relative error of component `i` is
/// `|a_i − n_i| / max(|a_i|, |n_i|, RELATIVE_ERROR_FLOOR)`.
pub fn grad_check<F>(
    mut loss_fn: F,
    params: &[f64],
    analytic: &[f64],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(Error::Shape {
            op: "grad_check",
            left: (params.len(), 1),
            right: (analytic.len(), 1),
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Contract(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let base = loss_fn(params)?;
    if !base.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss at the unperturbed point is {base}"
        )));
    }

    let mut probe = params.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic: analytic.first().copied().unwrap_or(0.0),
        numeric: 0.0,
        passed: true,
    };
    for i in 0..params.len() {
        probe[i] = params[i] + step;
        let plus = loss_fn(&probe)?;
        probe[i] = params[i] - step;
        let minus = loss_fn(&probe)?;
        probe[i] = params[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "loss while perturbing parameter {i}: +h → {plus}, −h → {minus}"
            )));
        }
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic[i];
        let denom = a.abs().max(numeric.abs()).max(RELATIVE_ERROR_FLOOR);
        let rel = (a - numeric).abs() / denom;
        if rel > report.max_relative_error || !rel.is_finite() {
            report.max_relative_error = rel;
            report.worst_index = i;
            report.analytic = a;
            report.numeric = numeric;
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half_norm(theta: &[f64]) -> Result<f64> {
        Ok(0.5 * theta.iter().map(|v| v * v).sum::<f64>())
    }

    #[test]
    fn quadratic_loss_is_exact() {
        let theta = vec![0.3, -1.2, 2.5, 0.0, 7.0];
        let report = grad_check(half_norm, &theta, &theta, 1e-5, 1e-8).unwrap();
        assert!(report.max_relative_error <= 1e-8, "{report:?}");
        assert!(report.passed);
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let theta = vec![0.3, -1.2, 2.5];
        let mut wrong = theta.clone();
        wrong[1] *= 1.01;
        let report = grad_check(half_norm, &theta, &wrong, 1e-5, 1e-5).unwrap();
        assert!(!report.passed);
        assert_eq!(report.worst_index, 1);
        assert!(report.max_relative_error > 1e-5);
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let err = grad_check(|t| Ok(1.0 / t[0]), &[0.0], &[0.0], 1e-5, 1e-5).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }
}
