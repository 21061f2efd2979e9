//! Control limits from a Gaussian kernel density estimate.

use crate::error::{Error, Result};

pub const MIN_KDE_SAMPLES: usize = 30;
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Grid padding on each side of the sample range, in bandwidths.
pub const GRID_PAD_BANDWIDTHS: f64 = 3.0;
/// Kernel contributions beyond this many bandwidths are dropped.
const KERNEL_CUTOFF: f64 = 9.0;

/// Silverman's rule `h = 1.06 · σ̂ · n^(−1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::Degenerate(
            "all statistic values are identical".into(),
        ));
    }
    Ok(1.06 * std * (n as f64).powf(-0.2))
}

/// Value at which the KDE cumulative distribution reaches `confidence`.
pub fn kde_threshold(samples: &[f64], confidence: f64) -> Result<f64> {
    kde_threshold_with_grid(samples, confidence, DEFAULT_GRID_POINTS)
}

/// As [`kde_threshold`] with an explicit grid size (≥ 16).
///
/// The density is evaluated on `grid_points` equally spaced points over
/// `[min − 3h, max + 3h]`, integrated with the trapezoid rule, normalised to
/// unit mass, and the first grid interval whose cumulative mass reaches the
/// confidence is located by bisection and interpolated linearly.
pub fn kde_threshold_with_grid(
    samples: &[f64],
    confidence: f64,
    grid_points: usize,
) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    if grid_points < 16 {
        return Err(Error::Config(format!(
            "KDE grid needs at least 16 points, got {grid_points}"
        )));
    }
    if samples.len() < MIN_KDE_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_KDE_SAMPLES,
            got: samples.len(),
        });
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("statistic sample {v}")));
    }
    let h = silverman_bandwidth(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = sorted[0] - GRID_PAD_BANDWIDTHS * h;
    let hi = sorted[sorted.len() - 1] + GRID_PAD_BANDWIDTHS * h;
    let dx = (hi - lo) / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points).map(|i| lo + i as f64 * dx).collect();

    // Unnormalised density; constant factors cancel in the normalisation.
    let reach = KERNEL_CUTOFF * h;
    let mut start = 0;
    let mut end = 0;
    let density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            while start < sorted.len() && sorted[start] < g - reach {
                start += 1;
            }
            while end < sorted.len() && sorted[end] <= g + reach {
                end += 1;
            }
            sorted[start..end]
                .iter()
                .map(|&s| {
                    let u = (g - s) / h;
                    (-0.5 * u * u).exp()
                })
                .sum()
        })
        .collect();

    let mut cdf = Vec::with_capacity(grid_points);
    cdf.push(0.0);
    for i in 1..grid_points {
        let prev = cdf[i - 1];
        cdf.push(prev + 0.5 * (density[i - 1] + density[i]) * dx);
    }
    let total = cdf[grid_points - 1];
    let target = confidence * total;

    // First index with cdf >= target.
    let (mut a, mut b) = (0usize, grid_points - 1);
    while a < b {
        let mid = (a + b) / 2;
        if cdf[mid] >= target {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    if a == 0 {
        return Ok(grid[0]);
    }
    let (c0, c1) = (cdf[a - 1], cdf[a]);
    let frac = if c1 > c0 {
        (target - c0) / (c1 - c0)
    } else {
        0.0
    };
    Ok(grid[a - 1] + frac * dx)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn normal_quantile() {
        let mut sum = 0.0;
        for seed in 0..8 {
            let mut s = normals(10_000, seed);
            let j = kde_threshold(&s, 0.99).unwrap();
            s.sort_by(f64::total_cmp);
            assert!(
                (j - s[9900]).abs() < 0.06,
                "seed {seed}: {j} vs empirical {}",
                s[9900]
            );
            sum += j;
        }
        let mean = sum / 8.0;
        assert!((mean - 2.326).abs() < 0.1, "{mean}");
    }

    #[test]
    fn uniform_quantile() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let j = kde_threshold(&u, 0.99).unwrap();
        assert!((j - 0.99).abs() < 0.05, "{j}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kde_threshold(&[1.0; 50], 0.99),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            kde_threshold(&normals(10, 3), 0.99),
            Err(Error::InsufficientData {
                needed: 30,
                got: 10
            })
        ));
        assert!(kde_threshold(&normals(100, 3), 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn higher_confidence_gives_higher_threshold(seed in 0u64..10_000) {
            let s = normals(200, seed);
            prop_assert!(kde_threshold(&s, 0.99).unwrap() > kde_threshold(&s, 0.95).unwrap());
        }

        #[test]
        fn translation_equivariant(seed in 0u64..10_000, c in -50.0f64..50.0) {
            let s: Vec<f64> = normals(300, seed).iter().map(|v| v * v).collect();
            let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
            let a = kde_threshold(&s, 0.99).unwrap();
            let b = kde_threshold(&shifted, 0.99).unwrap();
            let h = silverman_bandwidth(&s).unwrap();
            let spacing = (s.iter().cloned().fold(f64::MIN, f64::max)
                - s.iter().cloned().fold(f64::MAX, f64::min) + 6.0 * h) / 4095.0;
            prop_assert!((b - a - c).abs() <= spacing, "{a} {b} {c}");
        }
    }
}
