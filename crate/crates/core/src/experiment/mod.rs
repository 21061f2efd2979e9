//! Config-driven experiments: data preparation, method fitting, control
//! limits, fault monitoring and the files a run leaves behind.

mod config;
mod persist;
mod pipeline;
mod report;
mod score;

pub use config::{
    BaselineSection, DataConfig, ExperimentConfig, FaultConfig, FaultUnits, ModelSection,
    DEFAULT_CONFIDENCE, DEFAULT_NF_GRID,
};
pub use persist::{
    load_model, model_from_str, model_to_string, save_model, SavedModel, FORMAT_VERSION,
};
pub use pipeline::{
    execute, prepare_data, run_method, standardize, sweep_negative_feedback, ExperimentRun,
    FaultOutcome, FaultSeries, MethodRun, PreparedData,
};
pub use report::{
    comparison_table, emit_series, fmt4, input_hash, method_slug, metrics_csv, run_experiment,
    run_sweep, series_csv, sweep_csv, sweep_table, thresholds_csv, write_benchmark, RunManifest,
};
pub use score::{score, score_csv, scored_series_csv, scored_summary, write_scored_series, Scored};
