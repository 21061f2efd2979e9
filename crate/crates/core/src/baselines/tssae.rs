//! Teacher-student stacked autoencoder: the teacher side is pre-trained
//! without feature noise, then the student is fitted to the frozen teacher.

use rand::seq::index;

use super::feedback::NegativeFeedbackConfig;
use crate::error::{Error, Result};
use crate::numcore::{Adam, AdamConfig, Matrix};
use crate::tsuae::{
    losses_settled, seeded_rng, update_sigma2, IterationRecord, ModelConfig, TrainingFeatures,
    TrainingHistory, TsuaeModel, BATCH_STREAM,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TssaePhases {
    /// Pre-training budget; both optimizers step.
    pub teacher: usize,
    /// Student-only budget against the frozen teacher.
    pub student: usize,
}

impl TssaePhases {
    pub fn from_config(cfg: &ModelConfig) -> Self {
        Self {
            teacher: cfg.iterations,
            student: cfg.iterations,
        }
    }
}

pub fn fit_tssae(
    x: &Matrix,
    y: &Matrix,
    cfg: &ModelConfig,
) -> Result<(TsuaeModel, TrainingHistory)> {
    fit_tssae_phased(x, y, cfg, TssaePhases::from_config(cfg), None)
}

/// TSSAE whose pre-training decodes `(1 − k)·z_t + k·z_s`.
pub fn fit_tssae_nf(
    x: &Matrix,
    y: &Matrix,
    cfg: &ModelConfig,
    feedback: NegativeFeedbackConfig,
) -> Result<(TsuaeModel, TrainingHistory)> {
    fit_tssae_phased(x, y, cfg, TssaePhases::from_config(cfg), Some(feedback))
}

struct Loop {
    model: TsuaeModel,
    x_t: Matrix,
    x_s: Matrix,
    opt_student: Adam,
    opt_teacher: Adam,
    batch_rng: rand_chacha::ChaCha8Rng,
    records: Vec<IterationRecord>,
    feedback: Option<NegativeFeedbackConfig>,
}

impl Loop {
    fn iteration(&mut self, train_teacher: bool, lr_factor: f64) -> Result<()> {
        let cfg = self.model.config().clone();
        let n = self.x_t.rows();
        let (x_t, x_s) = match cfg.batch_size {
            Some(b) if b < n => {
                let mut rows = index::sample(&mut self.batch_rng, n, b).into_vec();
                rows.sort_unstable();
                (self.x_t.select_rows(&rows)?, self.x_s.select_rows(&rows)?)
            }
            _ => (self.x_t.clone(), self.x_s.clone()),
        };
        let zero = Matrix::zeros(x_t.rows(), cfg.v);
        let features = match self.feedback {
            Some(nf) => TrainingFeatures::Blended(nf.k()),
            None => TrainingFeatures::Perturbed(&zero),
        };
        let grads = self
            .model
            .loss_gradients(&x_t, &x_s, features, train_teacher)?;
        let sigma2 = match self.feedback {
            Some(_) => update_sigma2(&grads.z_t, &grads.z_s)?.max(cfg.sigma2_floor),
            None => 0.0,
        };
        if !grads.teacher_loss.is_finite() || !grads.student_loss.is_finite() || !sigma2.is_finite()
        {
            return Err(Error::Divergence {
                iteration: self.records.len(),
                teacher_loss: grads.teacher_loss,
                student_loss: grads.student_loss,
                sigma2,
            });
        }
        self.model.set_sigma2(sigma2);
        self.opt_student
            .set_learning_rate(cfg.student_learning_rate * lr_factor);
        self.opt_student
            .step(&mut self.model.student_params_mut(), &grads.student)?;
        if train_teacher {
            let mut g = grads.teacher.expect("teacher gradients requested");
            g.extend(grads.decoder.expect("decoder gradients requested"));
            self.opt_teacher
                .set_learning_rate(cfg.teacher_learning_rate * lr_factor);
            self.opt_teacher
                .step(&mut self.model.teacher_side_params_mut(), &g)?;
        }
        self.records.push(IterationRecord {
            teacher_loss: grads.teacher_loss,
            student_loss: grads.student_loss,
            sigma2,
            holdout: None,
        });
        Ok(())
    }

    fn phase(&mut self, budget: usize, train_teacher: bool) -> Result<()> {
        let cfg = self.model.config().clone();
        let start = self.records.len();
        for i in 0..budget {
            self.iteration(train_teacher, cfg.schedule.factor(i, budget))?;
            if losses_settled(&self.records[start..], cfg.stop_window, cfg.stop_tolerance) {
                break;
            }
        }
        Ok(())
    }
}

pub fn fit_tssae_phased(
    x: &Matrix,
    y: &Matrix,
    cfg: &ModelConfig,
    phases: TssaePhases,
    feedback: Option<NegativeFeedbackConfig>,
) -> Result<(TsuaeModel, TrainingHistory)> {
    let model = TsuaeModel::new(cfg.clone())?;
    if x.cols() != cfg.m || y.cols() != cfg.p || x.rows() != y.rows() {
        return Err(Error::Shape {
            op: "fit_tssae",
            left: x.shape(),
            right: y.shape(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut run = Loop {
        opt_student: Adam::new(
            AdamConfig::with_learning_rate(cfg.student_learning_rate),
            &model.student().param_lengths(),
        ),
        opt_teacher: Adam::new(
            AdamConfig::with_learning_rate(cfg.teacher_learning_rate),
            &model.teacher_side_lengths(),
        ),
        batch_rng: seeded_rng(cfg.seed, BATCH_STREAM),
        x_t: x.hstack(y)?,
        x_s: x.clone(),
        records: Vec::new(),
        model,
        feedback,
    };
    run.phase(phases.teacher, true)?;
    run.phase(phases.student, false)?;
    Ok((
        run.model,
        TrainingHistory {
            records: run.records,
        },
    ))
}
