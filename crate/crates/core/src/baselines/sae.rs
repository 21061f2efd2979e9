//! Autoencoder on the process variables alone: linear encoder, tanh decoder.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::numcore::{Adam, AdamConfig, AffineLayer, Matrix, Network};
use crate::tsuae::{seeded_rng, LearningRateSchedule, ModelConfig, BATCH_STREAM, INIT_STREAM};

#[derive(Debug, Clone, PartialEq)]
pub struct SaeConfig {
    pub v: usize,
    pub n_h: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub schedule: LearningRateSchedule,
    pub batch_size: Option<usize>,
    pub stop_tolerance: f64,
    pub stop_window: usize,
}

impl SaeConfig {
    /// Same sizing, budget and optimizer settings as the teacher side of a
    /// TSUAE configuration.
    pub fn from_model(cfg: &ModelConfig) -> Self {
        Self {
            v: cfg.v,
            n_h: cfg.n_h,
            iterations: cfg.iterations,
            learning_rate: cfg.teacher_learning_rate,
            seed: cfg.seed,
            schedule: cfg.schedule,
            batch_size: cfg.batch_size,
            stop_tolerance: cfg.stop_tolerance,
            stop_window: cfg.stop_window,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeModel {
    encoder: Network,
    decoder: Network,
}

impl SaeModel {
    pub fn new(m: usize, cfg: &SaeConfig) -> Result<Self> {
        if m == 0 || cfg.v == 0 || cfg.n_h == 0 {
            return Err(Error::Config(
                "autoencoder dimensions must be at least 1".into(),
            ));
        }
        let mut rng = seeded_rng(cfg.seed, INIT_STREAM);
        let encoder = Network::linear(AffineLayer::glorot(m, cfg.v, &mut rng));
        let decoder = Network::tanh_mlp(cfg.v, cfg.n_h, m, &mut rng);
        Ok(Self { encoder, decoder })
    }

    pub fn from_parts(encoder: Network, decoder: Network) -> Result<Self> {
        if encoder.out_dim() != decoder.in_dim() || decoder.out_dim() != encoder.in_dim() {
            return Err(Error::Shape {
                op: "sae_from_parts",
                left: (encoder.in_dim(), encoder.out_dim()),
                right: (decoder.in_dim(), decoder.out_dim()),
            });
        }
        Ok(Self { encoder, decoder })
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decoder.forward(&self.encoder.forward(x)?)
    }

    fn loss_and_gradients(&self, x: &Matrix) -> Result<(f64, Vec<Vec<f64>>)> {
        let ce = self.encoder.forward_cached(x)?;
        let cd = self.decoder.forward_cached(ce.output())?;
        let n = x.rows() as f64;
        let diff = cd.output().sub(x)?;
        let loss = diff.frobenius_squared() / n;
        let dg = self.decoder.backward(&cd, &diff.scale(2.0 / n))?;
        let eg = self.encoder.backward(&ce, &dg.input)?;
        let mut grads = eg.params;
        grads.extend(dg.params);
        Ok((loss, grads))
    }
}

/// Mean squared reconstruction loss per iteration.
pub type SaeHistory = Vec<f64>;

pub fn fit_sae(x: &Matrix, cfg: &SaeConfig) -> Result<(SaeModel, SaeHistory)> {
    if !(cfg.learning_rate > 0.0) || cfg.stop_window == 0 || cfg.batch_size == Some(0) {
        return Err(Error::Config(
            "invalid autoencoder optimizer settings".into(),
        ));
    }
    if x.rows() == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut model = SaeModel::new(x.cols(), cfg)?;
    let mut lengths = model.encoder.param_lengths();
    lengths.extend(model.decoder.param_lengths());
    let mut adam = Adam::new(AdamConfig::with_learning_rate(cfg.learning_rate), &lengths);
    let mut batch_rng = seeded_rng(cfg.seed, BATCH_STREAM);
    let mut history = Vec::with_capacity(cfg.iterations);
    let n = x.rows();

    for i in 0..cfg.iterations {
        let batch = match cfg.batch_size {
            Some(b) if b < n => {
                let mut rows = index::sample(&mut batch_rng, n, b).into_vec();
                rows.sort_unstable();
                x.select_rows(&rows)?
            }
            _ => x.clone(),
        };
        let (loss, grads) = model.loss_and_gradients(&batch)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                iteration: i,
                teacher_loss: loss,
                student_loss: f64::NAN,
                sigma2: f64::NAN,
            });
        }
        adam.set_learning_rate(cfg.learning_rate * cfg.schedule.factor(i, cfg.iterations));
        let mut params = model.encoder.params_mut();
        params.extend(model.decoder.params_mut());
        adam.step(&mut params, &grads)?;
        history.push(loss);
        if history.len() > cfg.stop_window {
            let now = history[history.len() - 1];
            let then = history[history.len() - 1 - cfg.stop_window];
            if (now - then).abs() / then.abs().max(f64::MIN_POSITIVE) < cfg.stop_tolerance {
                break;
            }
        }
    }
    Ok((model, history))
}
