use std::fmt;
use std::str::FromStr;

use super::feedback::NegativeFeedbackConfig;
use super::pca::{fit_pca, PcaModel, DEFAULT_VARIANCE_FRACTION};
use super::pls::{
    fit_pls, select_pls_components, PlsModel, DEFAULT_CV_FOLDS, DEFAULT_MAX_COMPONENTS,
};
use super::ridge::{fit_rr, select_ridge_lambda, RidgeModel, DEFAULT_LAMBDA_GRID};
use super::sae::{fit_sae, SaeConfig, SaeModel};
use super::tssae::{fit_tssae, fit_tssae_nf};
use crate::error::{Error, Result};
use crate::monitor::{Prediction, Subspace, SubspacePredictor};
use crate::numcore::Matrix;
use crate::tsuae::{train, ModelConfig, TsuaeModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodId {
    Pca,
    Pls,
    Rr,
    Sae,
    Tssae,
    Tsuae,
    TssaeNf(f64),
}

impl MethodId {
    pub const REPORT_ORDER: [MethodId; 6] = [
        MethodId::Tsuae,
        MethodId::Tssae,
        MethodId::Sae,
        MethodId::Pca,
        MethodId::Pls,
        MethodId::Rr,
    ];

    pub fn subspaces(&self) -> &'static [Subspace] {
        match self {
            MethodId::Pca | MethodId::Sae => &[Subspace::Process],
            MethodId::Pls | MethodId::Rr => &[Subspace::Quality],
            MethodId::Tssae | MethodId::Tsuae | MethodId::TssaeNf(_) => {
                &[Subspace::Process, Subspace::Quality]
            }
        }
    }

    pub fn models(&self, subspace: Subspace) -> bool {
        self.subspaces().contains(&subspace)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodId::Pca => f.write_str("pca"),
            MethodId::Pls => f.write_str("pls"),
            MethodId::Rr => f.write_str("rr"),
            MethodId::Sae => f.write_str("sae"),
            MethodId::Tssae => f.write_str("tssae"),
            MethodId::Tsuae => f.write_str("tsuae"),
            MethodId::TssaeNf(k) => write!(f, "tssae-nf:{k}"),
        }
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Ok(match lower.as_str() {
            "pca" => MethodId::Pca,
            "pls" => MethodId::Pls,
            "rr" => MethodId::Rr,
            "sae" => MethodId::Sae,
            "tssae" => MethodId::Tssae,
            "tsuae" => MethodId::Tsuae,
            other => {
                let k = other
                    .strip_prefix("tssae-nf:")
                    .and_then(|k| k.parse::<f64>().ok())
                    .ok_or_else(|| Error::UnknownMethod(s.to_string()))?;
                NegativeFeedbackConfig::new(k)?;
                MethodId::TssaeNf(k)
            }
        })
    }
}

/// Hyperparameters shared by every method in a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSettings {
    pub model: ModelConfig,
    pub pca_variance_fraction: f64,
    pub pls_max_components: usize,
    pub cv_folds: usize,
    pub ridge_lambdas: Vec<f64>,
}

impl MethodSettings {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            pca_variance_fraction: DEFAULT_VARIANCE_FRACTION,
            pls_max_components: DEFAULT_MAX_COMPONENTS,
            cv_folds: DEFAULT_CV_FOLDS,
            ridge_lambdas: DEFAULT_LAMBDA_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Pca(PcaModel),
    Pls(PlsModel),
    Rr(RidgeModel),
    Sae(SaeModel),
    /// TSUAE, TSSAE and TSSAE with negative feedback share one model type.
    TeacherStudent(TsuaeModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedMethod {
    pub id: MethodId,
    pub model: FittedModel,
}

impl SubspacePredictor for FittedMethod {
    fn predict(&self, x: &Matrix) -> Result<Prediction> {
        let (x_hat, y_hat) = match &self.model {
            FittedModel::Pca(m) => (Some(m.reconstruct(x)?), None),
            FittedModel::Pls(m) => (None, Some(m.predict(x)?)),
            FittedModel::Rr(m) => (None, Some(m.predict(x)?)),
            FittedModel::Sae(m) => (Some(m.reconstruct(x)?), None),
            FittedModel::TeacherStudent(m) => {
                let out = m.infer(x)?;
                (Some(out.x_hat), Some(out.y_hat))
            }
        };
        Ok(Prediction { x_hat, y_hat })
    }

    fn subspaces(&self) -> Vec<Subspace> {
        self.id.subspaces().to_vec()
    }
}

impl SubspacePredictor for TsuaeModel {
    fn predict(&self, x: &Matrix) -> Result<Prediction> {
        let out = self.infer(x)?;
        Ok(Prediction {
            x_hat: Some(out.x_hat),
            y_hat: Some(out.y_hat),
        })
    }

    fn subspaces(&self) -> Vec<Subspace> {
        vec![Subspace::Process, Subspace::Quality]
    }
}

/// Fits `id` on standardized training data.
pub fn fit_method(
    id: MethodId,
    x: &Matrix,
    y: &Matrix,
    settings: &MethodSettings,
) -> Result<FittedMethod> {
    let cfg = &settings.model;
    let model = match id {
        MethodId::Pca => FittedModel::Pca(fit_pca(x, settings.pca_variance_fraction)?),
        MethodId::Pls => {
            let a = select_pls_components(x, y, settings.pls_max_components, settings.cv_folds)?;
            FittedModel::Pls(fit_pls(x, y, a)?)
        }
        MethodId::Rr => {
            let lambda = select_ridge_lambda(x, y, &settings.ridge_lambdas, settings.cv_folds)?;
            FittedModel::Rr(fit_rr(x, y, lambda)?)
        }
        MethodId::Sae => FittedModel::Sae(fit_sae(x, &SaeConfig::from_model(cfg))?.0),
        MethodId::Tssae => FittedModel::TeacherStudent(fit_tssae(x, y, cfg)?.0),
        MethodId::TssaeNf(k) => {
            FittedModel::TeacherStudent(fit_tssae_nf(x, y, cfg, NegativeFeedbackConfig::new(k)?)?.0)
        }
        MethodId::Tsuae => {
            FittedModel::TeacherStudent(train(TsuaeModel::new(cfg.clone())?, x, y)?.0)
        }
    };
    Ok(FittedMethod { id, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers_round_trip() {
        for id in ["pca", "pls", "rr", "sae", "tssae", "tsuae", "tssae-nf:0.15"] {
            assert_eq!(id.parse::<MethodId>().unwrap().to_string(), id);
        }
        assert_eq!("TSUAE".parse::<MethodId>().unwrap(), MethodId::Tsuae);
        assert!(matches!(
            "kpls".parse::<MethodId>(),
            Err(Error::UnknownMethod(_))
        ));
        assert!("tssae-nf:-1".parse::<MethodId>().is_err());
        assert!("tssae-nf:x".parse::<MethodId>().is_err());
    }

    #[test]
    fn capabilities_follow_the_comparison_layout() {
        assert!(
            MethodId::Pca.models(Subspace::Process) && !MethodId::Pca.models(Subspace::Quality)
        );
        assert!(!MethodId::Rr.models(Subspace::Process) && MethodId::Rr.models(Subspace::Quality));
        assert!(
            MethodId::Tsuae.models(Subspace::Process) && MethodId::Tsuae.models(Subspace::Quality)
        );
    }
}
