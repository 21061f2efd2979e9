//! Teacher-student uncertainty autoencoder.
//!
//! A linear teacher encodes `x_t = [x, y]`, a linear student encodes `x`, and
//! a tanh decoder reconstructs `x_t`. During training the decoder sees the
//! teacher features perturbed by Gaussian noise whose variance is the current
//! teacher/student discrepancy; at test time it sees the student features.

mod config;
mod model;
mod ops;
mod train;

pub use config::{LearningRateSchedule, ModelConfig};
pub use model::{blend_features, Inference, LossGradients, TrainingFeatures, TsuaeModel};
pub(crate) use model::{seeded_rng, BATCH_STREAM, INIT_STREAM};
pub use ops::{reb, reconstruction_loss, sample_noise, student_loss, update_sigma2, Phase};
pub(crate) use train::losses_settled;
pub use train::{
    train, Feedback, HoldoutError, IterationRecord, Sigma2Policy, StepMask, StopReason, Trainer,
    TrainingHistory,
};
