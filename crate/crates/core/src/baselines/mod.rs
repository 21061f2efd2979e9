//! Comparison methods: PCA, PLS, ridge regression, a process-only
//! autoencoder, the two-phase teacher-student autoencoder and its
//! negative-feedback variant.

mod feedback;
mod methods;
mod pca;
mod pls;
mod ridge;
mod sae;
mod tssae;

pub use feedback::{reb_negative_feedback, NegativeFeedbackConfig};
pub use methods::{fit_method, FittedMethod, FittedModel, MethodId, MethodSettings};
pub use pca::{fit_pca, score_pca, PcaModel, DEFAULT_VARIANCE_FRACTION};
pub use pls::{
    fit_pls, predict_pls, select_pls_components, PlsModel, DEFAULT_CV_FOLDS, DEFAULT_MAX_COMPONENTS,
};
pub use ridge::{
    fit_rr, fit_rr_uncentered, predict_rr, select_ridge_lambda, RidgeModel, DEFAULT_LAMBDA_GRID,
};
pub use sae::{fit_sae, SaeConfig, SaeHistory, SaeModel};
pub use tssae::{fit_tssae, fit_tssae_nf, fit_tssae_phased, TssaePhases};
