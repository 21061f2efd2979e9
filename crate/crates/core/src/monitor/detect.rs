use super::evaluate::{evaluate, DetectionReport};
use super::kde::kde_threshold;
use super::statistic::{statistic_series, StatisticSeries, Subspace};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Reconstructed process variables and/or predicted quality variables; a
/// method that does not model a subspace leaves it `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x_hat: Option<Matrix>,
    pub y_hat: Option<Matrix>,
}

/// A fitted model that maps standardized process samples to predictions.
pub trait SubspacePredictor {
    fn predict(&self, x: &Matrix) -> Result<Prediction>;

    fn subspaces(&self) -> Vec<Subspace>;
}

/// Control limits; `None` for a subspace the method does not model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub process: Option<f64>,
    pub quality: Option<f64>,
    pub confidence: f64,
}

impl ThresholdPair {
    pub fn get(&self, subspace: Subspace) -> Option<f64> {
        match subspace {
            Subspace::Process => self.process,
            Subspace::Quality => self.quality,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statistics {
    pub process: Option<StatisticSeries>,
    pub quality: Option<StatisticSeries>,
}

impl Statistics {
    pub fn get(&self, subspace: Subspace) -> Option<&StatisticSeries> {
        match subspace {
            Subspace::Process => self.process.as_ref(),
            Subspace::Quality => self.quality.as_ref(),
        }
    }
}

/// `Dx` against `x` and, when labels are given, `Dy` against `y`.
pub fn statistics(
    model: &dyn SubspacePredictor,
    x: &Matrix,
    y: Option<&Matrix>,
) -> Result<Statistics> {
    let pred = model.predict(x)?;
    let process = match &pred.x_hat {
        Some(x_hat) => Some(statistic_series(x, x_hat, Subspace::Process)?),
        None => None,
    };
    let quality = match (&pred.y_hat, y) {
        (Some(y_hat), Some(y)) => Some(statistic_series(y, y_hat, Subspace::Quality)?),
        _ => None,
    };
    Ok(Statistics { process, quality })
}

/// KDE limits from the statistics of the (normal) threshold-fitting data.
pub fn fit_thresholds(
    model: &dyn SubspacePredictor,
    x: &Matrix,
    y: &Matrix,
    confidence: f64,
) -> Result<ThresholdPair> {
    let stats = statistics(model, x, Some(y))?;
    let limit = |s: &Option<StatisticSeries>| {
        s.as_ref()
            .map(|s| kde_threshold(&s.values, confidence))
            .transpose()
    };
    Ok(ThresholdPair {
        process: limit(&stats.process)?,
        quality: limit(&stats.quality)?,
        confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QualityReport {
    /// Fail with an unavailable error when quality labels are missing.
    Required,
    IfAvailable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub statistics: Statistics,
    pub process: Option<DetectionReport>,
    pub quality: Option<DetectionReport>,
}

pub fn detect(
    model: &dyn SubspacePredictor,
    x: &Matrix,
    y: Option<&Matrix>,
    thresholds: &ThresholdPair,
    fault_start: usize,
    quality: QualityReport,
) -> Result<Detection> {
    let models_quality = model.subspaces().contains(&Subspace::Quality);
    if y.is_none() && models_quality && quality == QualityReport::Required {
        return Err(Error::Unavailable(
            "quality labels for the quality-subspace report".into(),
        ));
    }
    let stats = statistics(model, x, y)?;
    let report = |subspace: Subspace| -> Result<Option<DetectionReport>> {
        match (stats.get(subspace), thresholds.get(subspace)) {
            (Some(s), Some(j)) => evaluate(s, j, fault_start).map(Some),
            _ => Ok(None),
        }
    };
    Ok(Detection {
        process: report(Subspace::Process)?,
        quality: report(Subspace::Quality)?,
        statistics: stats,
    })
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    use super::*;

    /// Predicts x̂ = 0 and ŷ = 0.
    struct Zero;

    impl SubspacePredictor for Zero {
        fn predict(&self, x: &Matrix) -> Result<Prediction> {
            Ok(Prediction {
                x_hat: Some(Matrix::zeros(x.rows(), x.cols())),
                y_hat: Some(Matrix::zeros(x.rows(), 1)),
            })
        }

        fn subspaces(&self) -> Vec<Subspace> {
            vec![Subspace::Process, Subspace::Quality]
        }
    }

    fn gaussian(n: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, cols, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn normal_data_false_alarm_rate_is_calibrated() {
        let j = fit_thresholds(&Zero, &gaussian(1000, 3, 1), &gaussian(1000, 1, 2), 0.99).unwrap();
        let d = detect(
            &Zero,
            &gaussian(1000, 3, 3),
            Some(&gaussian(1000, 1, 4)),
            &j,
            1001,
            QualityReport::Required,
        )
        .unwrap();
        assert!(d.process.unwrap().far <= 0.03);
        assert!(d.quality.unwrap().far <= 0.03);
    }

    #[test]
    fn threshold_data_itself_stays_under_the_limit() {
        let (x, y) = (gaussian(1000, 3, 5), gaussian(1000, 1, 6));
        let j = fit_thresholds(&Zero, &x, &y, 0.99).unwrap();
        let d = detect(&Zero, &x, Some(&y), &j, 1001, QualityReport::Required).unwrap();
        assert!(d.process.unwrap().far <= 0.01 + 0.01);
    }

    #[test]
    fn quality_step_shows_after_fault_start() {
        let (x, y) = (gaussian(1000, 3, 7), gaussian(1000, 1, 8));
        let j = fit_thresholds(&Zero, &x, &y, 0.99).unwrap();
        let mut faulty = gaussian(1000, 1, 9);
        for i in 200..1000 {
            faulty[(i, 0)] += 4.0;
        }
        let d = detect(
            &Zero,
            &gaussian(1000, 3, 10),
            Some(&faulty),
            &j,
            201,
            QualityReport::Required,
        )
        .unwrap();
        let q = d.quality.unwrap();
        assert!(q.fdr > 0.8 && q.far <= 0.03, "{q:?}");
    }

    #[test]
    fn missing_labels() {
        let j = ThresholdPair {
            process: Some(1.0),
            quality: Some(1.0),
            confidence: 0.99,
        };
        let x = gaussian(10, 3, 11);
        let err = detect(&Zero, &x, None, &j, 5, QualityReport::Required).unwrap_err();
        assert!(matches!(err, Error::Unavailable(_)));
        let d = detect(&Zero, &x, None, &j, 5, QualityReport::IfAvailable).unwrap();
        assert!(d.quality.is_none() && d.process.is_some());
    }
}
