//! Adaptive-moment (Adam) optimizer.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Per-parameter moment accumulators. Shapes are fixed at construction and
/// mirror the parameter tensors they update.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    steps: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, param_lengths: &[usize]) -> Self {
        Self {
            config,
            steps: 0,
            first_moment: param_lengths.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: param_lengths.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Changes the step size for subsequent updates; moment state is kept.
    pub fn set_learning_rate(&mut self, learning_rate: f64) {
        self.config.learning_rate = learning_rate;
    }

    /// One bias-corrected update of every tensor in `params`.
    pub fn step<G: AsRef<[f64]>>(&mut self, params: &mut [&mut [f64]], grads: &[G]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != self.first_moment.len() {
            return Err(Error::Shape {
                op: "optimizer_step",
                left: (self.first_moment.len(), 1),
                right: (params.len(), grads.len()),
            });
        }
        for (idx, (p, g)) in params.iter().zip(grads).enumerate() {
            let expected = self.first_moment[idx].len();
            if p.len() != expected || g.as_ref().len() != expected {
                return Err(Error::Shape {
                    op: "optimizer_step",
                    left: (idx, expected),
                    right: (p.len(), g.as_ref().len()),
                });
            }
        }

        self.steps += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.steps as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for (idx, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.first_moment[idx];
            let v = &mut self.second_moment[idx];
            for (((w, &gi), mi), vi) in p
                .iter_mut()
                .zip(g.as_ref())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / correction1;
                let v_hat = *vi / correction2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
