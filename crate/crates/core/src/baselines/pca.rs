use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::monitor::{statistic_series, StatisticSeries, Subspace};
use crate::numcore::Matrix;

pub const DEFAULT_VARIANCE_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub(crate) means: Vec<f64>,
    /// `d × r`, orthonormal columns in decreasing eigenvalue order.
    pub(crate) loadings: Matrix,
    /// All `d` covariance eigenvalues, descending.
    pub(crate) eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn loadings(&self) -> &Matrix {
        &self.loadings
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn components(&self) -> usize {
        self.loadings.cols()
    }

    /// Projection onto the retained subspace, back in the input coordinates.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.means.len();
        if x.cols() != d {
            return Err(Error::Shape {
                op: "pca_reconstruct",
                left: (self.loadings.rows(), self.loadings.cols()),
                right: x.shape(),
            });
        }
        let centered = Matrix::from_fn(x.rows(), d, |i, j| x[(i, j)] - self.means[j]);
        let scores = centered.matmul(&self.loadings)?;
        let mut back = scores.matmul(&self.loadings.transpose())?;
        for row in 0..back.rows() {
            for (v, m) in back.row_mut(row).iter_mut().zip(&self.means) {
                *v += m;
            }
        }
        Ok(back)
    }
}

/// Covariance eigendecomposition retaining the fewest components whose
/// cumulative eigenvalue share reaches `variance_fraction`.
pub fn fit_pca(x: &Matrix, variance_fraction: f64) -> Result<PcaModel> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "variance fraction must lie in (0, 1], got {variance_fraction}"
        )));
    }
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let means = x.column_means();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("all columns are constant".into()));
    }

    let r = if variance_fraction >= 1.0 {
        d
    } else {
        let mut acc = 0.0;
        let mut r = d;
        for (k, ev) in eigenvalues.iter().enumerate() {
            acc += ev;
            if acc / total >= variance_fraction {
                r = k + 1;
                break;
            }
        }
        r
    };

    let loadings = Matrix::from_fn(d, r, |i, c| eig.eigenvectors[(i, order[c])]);
    let loadings = fix_signs(loadings);
    Ok(PcaModel {
        means,
        loadings,
        eigenvalues,
    })
}

/// Flips each column so that its largest-magnitude entry is positive.
fn fix_signs(mut loadings: Matrix) -> Matrix {
    for c in 0..loadings.cols() {
        let col = loadings.column(c);
        let pivot = col.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if pivot < 0.0 {
            for i in 0..loadings.rows() {
                loadings[(i, c)] = -loadings[(i, c)];
            }
        }
    }
    loadings
}

/// Squared residual of each sample after projection (SPE).
pub fn score_pca(model: &PcaModel, x: &Matrix) -> Result<StatisticSeries> {
    statistic_series(x, &model.reconstruct(x)?, Subspace::Process)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Cyclic Jacobi rotations on a small symmetric matrix.
    fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = a.len();
        let mut a = a.to_vec();
        let mut v: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect())
            .collect();
        for _sweep in 0..100 {
            let off: f64 = (0..d)
                .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    for row in v.iter_mut() {
                        let (vp, vq) = (row[p], row[q]);
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }
        ((0..d).map(|i| a[i][i]).collect(), v)
    }

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scales: Vec<f64> = (0..d).map(|j| 0.5 + j as f64).collect();
        Matrix::from_fn(n, d, |_, j| rng.random_range(-1.0..1.0) * scales[j])
    }

    fn loadings_match_oracle(x: &Matrix) -> f64 {
        let (n, d) = x.shape();
        let model = fit_pca(x, 1.0).unwrap();
        let means = x.column_means();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| {
                        (0..n)
                            .map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b]))
                            .sum::<f64>()
                            / (n - 1) as f64
                    })
                    .collect()
            })
            .collect();
        let (vals, vecs) = jacobi_eigen(&cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let mut worst = 0.0f64;
        for (c, &k) in order.iter().enumerate() {
            let dot: f64 = (0..d).map(|i| vecs[i][k] * model.loadings()[(i, c)]).sum();
            let sign = dot.signum();
            for i in 0..d {
                worst = worst.max((vecs[i][k] * sign - model.loadings()[(i, c)]).abs());
            }
            worst = worst.max((vals[k] - model.eigenvalues()[c]).abs());
        }
        worst
    }

    #[test]
    fn all_components_reconstruct_exactly() {
        let x = random(30, 4, 1);
        let model = fit_pca(&x, 1.0).unwrap();
        assert_eq!(model.components(), 4);
        assert!(score_pca(&model, &x)
            .unwrap()
            .values
            .iter()
            .all(|v| *v < 1e-20));
    }

    #[test]
    fn line_data() {
        let x = Matrix::from_fn(10, 2, |i, j| {
            (i as f64 - 4.5) * if j == 0 { 1.0 } else { 2.0 }
        });
        let model = fit_pca(&x, 0.9).unwrap();
        assert_eq!(model.components(), 1);
        assert!(score_pca(&model, &x)
            .unwrap()
            .values
            .iter()
            .all(|v| *v < 1e-20));
        // Offset of size δ along the normal (2, −1)/√5.
        let delta = 0.3;
        let (nx, ny) = (2.0 / 5f64.sqrt(), -1.0 / 5f64.sqrt());
        let probe = Matrix::from_rows(&[[1.0 + delta * nx, 2.0 + delta * ny]]).unwrap();
        let s = score_pca(&model, &probe).unwrap().values[0];
        assert!((s - delta * delta).abs() < 1e-12, "{s}");
    }

    #[test]
    fn loadings_match_jacobi_oracle() {
        assert!(loadings_match_oracle(&random(50, 6, 2)) < 1e-8);
    }

    #[test]
    fn retained_count_follows_fraction() {
        let x = random(200, 5, 3);
        let model = fit_pca(&x, 0.5).unwrap();
        let ev = model.eigenvalues();
        let total: f64 = ev.iter().sum();
        let r = model.components();
        assert!(ev[..r].iter().sum::<f64>() / total >= 0.5);
        assert!(r == 1 || ev[..r - 1].iter().sum::<f64>() / total < 0.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_pca(&Matrix::zeros(1, 3), 0.9),
            Err(Error::InsufficientData { .. })
        ));
        assert!(fit_pca(&Matrix::zeros(5, 3), 0.9).is_err());
        assert!(fit_pca(&random(5, 3, 0), 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn loadings_are_orthonormal(seed in 0u64..1000, frac in 0.3f64..1.0) {
            let model = fit_pca(&random(40, 5, seed), frac).unwrap();
            let p = model.loadings();
            let gram = p.transpose().matmul(p).unwrap();
            let eye = Matrix::identity(p.cols());
            prop_assert!(gram.max_abs_diff(&eye).unwrap() < 1e-8);
        }

        #[test]
        fn oracle_agreement(seed in 0u64..1000) {
            prop_assert!(loadings_match_oracle(&random(50, 6, seed)) < 1e-8);
        }
    }
}
