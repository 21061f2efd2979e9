use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::tsuae::blend_features;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeFeedbackConfig {
    k: f64,
}

impl NegativeFeedbackConfig {
    pub fn new(k: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::Config(format!(
                "negative feedback rate must be finite and >= 0, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

/// `(1 − k)·z_t + k·z_s`.
pub fn reb_negative_feedback(z_t: &Matrix, z_s: &Matrix, k: f64) -> Result<Matrix> {
    NegativeFeedbackConfig::new(k)?;
    blend_features(z_t, z_s, k)
}
