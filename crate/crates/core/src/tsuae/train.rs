//! Asynchronous-iteration training.
//!
//! One iteration: forward both encoders, draw `d_f ~ N(0, σ²I)` per sample,
//! decode `REB(z_t, z_s, Training)`, compute `L_t` and `L_s`, refresh σ²,
//! then step the student on `∇L_s` and the teacher+decoder on `∇L_t`.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use super::model::{seeded_rng, TrainingFeatures, TsuaeModel, BATCH_STREAM, NOISE_STREAM};
use super::ops::{sample_noise, update_sigma2};
use crate::error::{Error, Result};
use crate::numcore::{Adam, AdamConfig, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma2Policy {
    /// σ² tracks the mean squared feature discrepancy every iteration.
    Estimated,
    /// σ² is held at the given value.
    Fixed(f64),
}

/// How the decoder input is formed during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feedback {
    /// `z_t + d_f` with `d_f ~ N(0, σ²I)`.
    Uncertainty(Sigma2Policy),
    /// `(1 − k)·z_t + k·z_s`, no noise.
    Negative { k: f64 },
}

/// Which optimizers run in an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepMask {
    pub student: bool,
    pub teacher: bool,
}

impl StepMask {
    pub const BOTH: Self = Self {
        student: true,
        teacher: true,
    };
    pub const STUDENT_ONLY: Self = Self {
        student: true,
        teacher: false,
    };
    pub const TEACHER_ONLY: Self = Self {
        student: false,
        teacher: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldoutError {
    pub process_rmse: f64,
    pub quality_rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub teacher_loss: f64,
    pub student_loss: f64,
    /// σ² after this iteration's update.
    pub sigma2: f64,
    pub holdout: Option<HoldoutError>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingHistory {
    pub records: Vec<IterationRecord>,
}

impl TrainingHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first(&self) -> Option<&IterationRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    /// Both losses changed by less than the tolerance over the window ending
    /// at this (phase-local, 0-based) iteration.
    Converged {
        iteration: usize,
    },
}

/// `true` when both losses moved by less than `tolerance` (relative) between
/// `records[len − 1 − window]` and the last record.
pub(crate) fn losses_settled(records: &[IterationRecord], window: usize, tolerance: f64) -> bool {
    if records.len() <= window {
        return false;
    }
    let now = &records[records.len() - 1];
    let then = &records[records.len() - 1 - window];
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    rel(now.teacher_loss, then.teacher_loss) < tolerance
        && rel(now.student_loss, then.student_loss) < tolerance
}

pub struct Trainer {
    model: TsuaeModel,
    feedback: Feedback,
    x_t: Matrix,
    x_s: Matrix,
    holdout: Option<(Matrix, Matrix)>,
    opt_student: Adam,
    opt_teacher: Adam,
    noise_rng: ChaCha8Rng,
    batch_rng: ChaCha8Rng,
    history: TrainingHistory,
}

impl Trainer {
    /// `x` holds the `m` process columns and `y` the `p` quality columns of the
    /// standardized training set.
    pub fn new(model: TsuaeModel, x: &Matrix, y: &Matrix, feedback: Feedback) -> Result<Self> {
        let cfg = model.config().clone();
        if x.cols() != cfg.m || y.cols() != cfg.p || x.rows() != y.rows() {
            return Err(Error::Shape {
                op: "train",
                left: x.shape(),
                right: y.shape(),
            });
        }
        if x.rows() == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        match feedback {
            Feedback::Uncertainty(Sigma2Policy::Fixed(s)) if !(s >= 0.0 && s.is_finite()) => {
                return Err(Error::Config(format!(
                    "fixed sigma2 must be non-negative, got {s}"
                )));
            }
            Feedback::Negative { k } if !(k >= 0.0 && k.is_finite()) => {
                return Err(Error::Config(format!(
                    "feedback rate must be non-negative, got {k}"
                )));
            }
            _ => {}
        }
        let opt_student = Adam::new(
            AdamConfig::with_learning_rate(cfg.student_learning_rate),
            &model.student().param_lengths(),
        );
        let opt_teacher = Adam::new(
            AdamConfig::with_learning_rate(cfg.teacher_learning_rate),
            &model.teacher_side_lengths(),
        );
        Ok(Self {
            x_t: x.hstack(y)?,
            x_s: x.clone(),
            holdout: None,
            opt_student,
            opt_teacher,
            noise_rng: seeded_rng(cfg.seed, NOISE_STREAM),
            batch_rng: seeded_rng(cfg.seed, BATCH_STREAM),
            history: TrainingHistory::default(),
            model,
            feedback,
        })
    }

    /// Records process/quality RMSE of test-phase inference on a held-out
    /// set after every iteration.
    pub fn with_holdout(mut self, x: &Matrix, y: &Matrix) -> Result<Self> {
        let cfg = self.model.config();
        if x.cols() != cfg.m || y.cols() != cfg.p || x.rows() != y.rows() {
            return Err(Error::Shape {
                op: "holdout",
                left: x.shape(),
                right: y.shape(),
            });
        }
        self.holdout = Some((x.clone(), y.clone()));
        Ok(self)
    }

    pub fn model(&self) -> &TsuaeModel {
        &self.model
    }

    pub fn history(&self) -> &TrainingHistory {
        &self.history
    }

    pub fn set_feedback(&mut self, feedback: Feedback) {
        self.feedback = feedback;
    }

    fn batch(&mut self) -> (Matrix, Matrix) {
        let n = self.x_t.rows();
        match self.model.config().batch_size {
            Some(b) if b < n => {
                let mut rows = index::sample(&mut self.batch_rng, n, b).into_vec();
                rows.sort_unstable();
                (
                    self.x_t.select_rows(&rows).expect("rows in range"),
                    self.x_s.select_rows(&rows).expect("rows in range"),
                )
            }
            _ => (self.x_t.clone(), self.x_s.clone()),
        }
    }

    /// One iteration at the base learning rates.
    pub fn step(&mut self, mask: StepMask) -> Result<IterationRecord> {
        self.step_scaled(mask, 1.0)
    }

    fn step_scaled(&mut self, mask: StepMask, lr_factor: f64) -> Result<IterationRecord> {
        let (x_t, x_s) = self.batch();
        let cfg = self.model.config().clone();
        let noise;
        let features = match self.feedback {
            Feedback::Uncertainty(policy) => {
                let sigma2 = match policy {
                    Sigma2Policy::Estimated => self.model.sigma2(),
                    Sigma2Policy::Fixed(s) => s,
                };
                noise = sample_noise(sigma2, x_t.rows(), cfg.v, &mut self.noise_rng)?;
                TrainingFeatures::Perturbed(&noise)
            }
            Feedback::Negative { k } => TrainingFeatures::Blended(k),
        };
        let grads = self
            .model
            .loss_gradients(&x_t, &x_s, features, mask.teacher)?;
        let discrepancy = update_sigma2(&grads.z_t, &grads.z_s)?;
        let sigma2 = match self.feedback {
            Feedback::Uncertainty(Sigma2Policy::Fixed(s)) => s,
            _ => discrepancy.max(cfg.sigma2_floor),
        };
        if !grads.teacher_loss.is_finite() || !grads.student_loss.is_finite() || !sigma2.is_finite()
        {
            return Err(Error::Divergence {
                iteration: self.history.len(),
                teacher_loss: grads.teacher_loss,
                student_loss: grads.student_loss,
                sigma2,
            });
        }
        self.model.set_sigma2(sigma2);

        if mask.student {
            self.opt_student
                .set_learning_rate(cfg.student_learning_rate * lr_factor);
            self.opt_student
                .step(&mut self.model.student_params_mut(), &grads.student)?;
        }
        if mask.teacher {
            let mut teacher_grads = grads.teacher.expect("teacher side requested");
            teacher_grads.extend(grads.decoder.expect("teacher side requested"));
            self.opt_teacher
                .set_learning_rate(cfg.teacher_learning_rate * lr_factor);
            self.opt_teacher
                .step(&mut self.model.teacher_side_params_mut(), &teacher_grads)?;
        }

        let holdout = match &self.holdout {
            Some((hx, hy)) => {
                let out = self.model.infer(hx)?;
                Some(HoldoutError {
                    process_rmse: rmse(hx, &out.x_hat)?,
                    quality_rmse: rmse(hy, &out.y_hat)?,
                })
            }
            None => None,
        };
        let record = IterationRecord {
            teacher_loss: grads.teacher_loss,
            student_loss: grads.student_loss,
            sigma2,
            holdout,
        };
        self.history.records.push(record);
        Ok(record)
    }

    /// Up to `budget` iterations with the configured schedule, stopping early
    /// once both losses settle.
    pub fn run(&mut self, budget: usize, mask: StepMask) -> Result<StopReason> {
        let start = self.history.len();
        let cfg = self.model.config().clone();
        for i in 0..budget {
            self.step_scaled(mask, cfg.schedule.factor(i, budget))?;
            if losses_settled(
                &self.history.records[start..],
                cfg.stop_window,
                cfg.stop_tolerance,
            ) {
                return Ok(StopReason::Converged { iteration: i });
            }
        }
        Ok(StopReason::Budget)
    }

    pub fn finish(self) -> (TsuaeModel, TrainingHistory) {
        (self.model, self.history)
    }
}

fn rmse(actual: &Matrix, predicted: &Matrix) -> Result<f64> {
    let diff = actual.sub(predicted)?;
    Ok((diff.frobenius_squared() / diff.as_slice().len().max(1) as f64).sqrt())
}

/// Trains `model` on `(x, y)` with estimated σ² for `config.iterations`.
pub fn train(model: TsuaeModel, x: &Matrix, y: &Matrix) -> Result<(TsuaeModel, TrainingHistory)> {
    let budget = model.config().iterations;
    let mut trainer = Trainer::new(model, x, y, Feedback::Uncertainty(Sigma2Policy::Estimated))?;
    trainer.run(budget, StepMask::BOTH)?;
    Ok(trainer.finish())
}
