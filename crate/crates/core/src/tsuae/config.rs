use crate::error::{Error, Result};

/// Step-size schedule shared by both optimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRateSchedule {
    Constant,
    /// Half-cosine decay from the base rate to `base * final_fraction` over the
    /// iteration budget.
    Cosine {
        final_fraction: f64,
    },
}

impl LearningRateSchedule {
    pub fn factor(&self, iteration: usize, budget: usize) -> f64 {
        match *self {
            LearningRateSchedule::Constant => 1.0,
            LearningRateSchedule::Cosine { final_fraction } => {
                if budget <= 1 {
                    return 1.0;
                }
                let t = (iteration.min(budget - 1)) as f64 / (budget - 1) as f64;
                let cos = 0.5 * (1.0 + (std::f64::consts::PI * t).cos());
                final_fraction + (1.0 - final_fraction) * cos
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Process-variable count.
    pub m: usize,
    /// Quality-variable count.
    pub p: usize,
    /// Feature dimension.
    pub v: usize,
    /// Decoder hidden width.
    pub n_h: usize,
    pub iterations: usize,
    /// Relative loss change under which training stops early.
    pub stop_tolerance: f64,
    pub stop_window: usize,
    pub seed: u64,
    pub initial_sigma2: f64,
    pub sigma2_floor: f64,
    pub student_learning_rate: f64,
    pub teacher_learning_rate: f64,
    pub schedule: LearningRateSchedule,
    /// `None` trains on the full batch every iteration.
    pub batch_size: Option<usize>,
}

impl ModelConfig {
    pub fn new(m: usize, p: usize) -> Self {
        Self {
            m,
            p,
            v: 6,
            n_h: 16,
            iterations: 2000,
            stop_tolerance: 1e-5,
            stop_window: 10,
            seed: 0,
            initial_sigma2: 1.0,
            sigma2_floor: 1e-8,
            student_learning_rate: 1e-3,
            teacher_learning_rate: 1e-3,
            schedule: LearningRateSchedule::Constant,
            batch_size: None,
        }
    }

    pub fn n_in(&self) -> usize {
        self.m + self.p
    }

    pub fn n_out(&self) -> usize {
        self.m + self.p
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("m", self.m),
            ("p", self.p),
            ("v", self.v),
            ("n_h", self.n_h),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, d)| *d == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        for (name, lr) in [
            ("student learning rate", self.student_learning_rate),
            ("teacher learning rate", self.teacher_learning_rate),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        if !(self.initial_sigma2 >= 0.0 && self.initial_sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "initial sigma2 must be non-negative, got {}",
                self.initial_sigma2
            )));
        }
        if !(self.sigma2_floor >= 0.0) || !(self.stop_tolerance >= 0.0) {
            return Err(Error::Config(
                "sigma2 floor and stop tolerance must be non-negative".into(),
            ));
        }
        if self.stop_window == 0 {
            return Err(Error::Config("stop window must be at least 1".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if let LearningRateSchedule::Cosine { final_fraction } = self.schedule {
            if !(0.0..=1.0).contains(&final_fraction) {
                return Err(Error::Config(format!(
                    "cosine final fraction must lie in [0, 1], got {final_fraction}"
                )));
            }
        }
        Ok(())
    }
}
