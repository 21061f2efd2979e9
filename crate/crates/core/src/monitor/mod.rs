//! Error statistics, KDE control limits and FAR/FDR evaluation.

mod detect;
mod evaluate;
mod kde;
mod statistic;

pub use detect::{
    detect, fit_thresholds, statistics, Detection, Prediction, QualityReport, Statistics,
    SubspacePredictor, ThresholdPair,
};
pub use evaluate::{evaluate, DetectionReport};
pub use kde::{
    kde_threshold, kde_threshold_with_grid, silverman_bandwidth, DEFAULT_GRID_POINTS,
    MIN_KDE_SAMPLES,
};
pub use statistic::{statistic_series, StatisticSeries, Subspace};
