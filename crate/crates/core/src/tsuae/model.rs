use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::ops::{reb, reconstruction_loss, student_loss, Phase};
use crate::error::{Error, Result};
use crate::numcore::{AffineLayer, Matrix, Network};

/// Generator stream used for weight initialisation; training noise and batch
/// selection draw from separate streams of the same seed.
pub(crate) const INIT_STREAM: u64 = 0;
pub(crate) const NOISE_STREAM: u64 = 1;
pub(crate) const BATCH_STREAM: u64 = 2;

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsuaeModel {
    config: ModelConfig,
    teacher: Network,
    student: Network,
    decoder: Network,
    sigma2: f64,
}

/// Decoder input used while training.
#[derive(Debug, Clone, Copy)]
pub enum TrainingFeatures<'a> {
    /// `z_t + d_f`.
    Perturbed(&'a Matrix),
    /// `(1 − k)·z_t + k·z_s`.
    Blended(f64),
}

/// Split reconstruction `x̂_t = [x̂, ŷ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub x_hat: Matrix,
    pub y_hat: Matrix,
}

/// Both losses and their parameter gradients for one batch. The student
/// gradients come from `L_s` only; the teacher and decoder gradients from
/// `L_t` only.
#[derive(Debug, Clone)]
pub struct LossGradients {
    pub teacher_loss: f64,
    pub student_loss: f64,
    pub z_t: Matrix,
    pub z_s: Matrix,
    pub student: Vec<Vec<f64>>,
    /// `None` when the teacher side was not requested.
    pub teacher: Option<Vec<Vec<f64>>>,
    pub decoder: Option<Vec<Vec<f64>>>,
}

/// `(1 − k)·z_t + k·z_s`.
pub fn blend_features(z_t: &Matrix, z_s: &Matrix, k: f64) -> Result<Matrix> {
    z_t.zip_with("reb_negative_feedback", z_s, |t, s| (1.0 - k) * t + k * s)
}

impl TsuaeModel {
    /// Glorot-initialised model; `sigma2` starts at `config.initial_sigma2`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed, INIT_STREAM);
        let teacher = Network::linear(AffineLayer::glorot(config.n_in(), config.v, &mut rng));
        let student = Network::linear(AffineLayer::glorot(config.m, config.v, &mut rng));
        let decoder = Network::tanh_mlp(config.v, config.n_h, config.n_out(), &mut rng);
        let sigma2 = config.initial_sigma2;
        Ok(Self {
            config,
            teacher,
            student,
            decoder,
            sigma2,
        })
    }

    pub fn from_parts(
        config: ModelConfig,
        teacher: Network,
        student: Network,
        decoder: Network,
        sigma2: f64,
    ) -> Result<Self> {
        config.validate()?;
        let checks = [
            (
                "teacher",
                teacher.in_dim(),
                config.n_in(),
                teacher.out_dim(),
                config.v,
            ),
            (
                "student",
                student.in_dim(),
                config.m,
                student.out_dim(),
                config.v,
            ),
            (
                "decoder",
                decoder.in_dim(),
                config.v,
                decoder.out_dim(),
                config.n_out(),
            ),
        ];
        for (name, got_in, want_in, got_out, want_out) in checks {
            if got_in != want_in || got_out != want_out {
                return Err(Error::Contract(format!(
                    "{name} maps {got_in}→{got_out}, config expects {want_in}→{want_out}"
                )));
            }
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::Contract(format!(
                "sigma2 must be non-negative, got {sigma2}"
            )));
        }
        Ok(Self {
            config,
            teacher,
            student,
            decoder,
            sigma2,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn teacher(&self) -> &Network {
        &self.teacher
    }

    pub fn student(&self) -> &Network {
        &self.student
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub(crate) fn set_sigma2(&mut self, sigma2: f64) {
        self.sigma2 = sigma2;
    }

    pub(crate) fn student_params_mut(&mut self) -> Vec<&mut [f64]> {
        self.student.params_mut()
    }

    /// Teacher tensors followed by decoder tensors.
    pub(crate) fn teacher_side_params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut params = self.teacher.params_mut();
        params.extend(self.decoder.params_mut());
        params
    }

    pub(crate) fn teacher_side_lengths(&self) -> Vec<usize> {
        let mut lens = self.teacher.param_lengths();
        lens.extend(self.decoder.param_lengths());
        lens
    }

    /// All parameters in the order teacher, student, decoder.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.teacher.flat_params();
        out.extend(self.student.flat_params());
        out.extend(self.decoder.flat_params());
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        let t = self.teacher.param_count();
        let s = self.student.param_count();
        let d = self.decoder.param_count();
        if values.len() != t + s + d {
            return Err(Error::Shape {
                op: "set_flat_params",
                left: (t + s + d, 1),
                right: (values.len(), 1),
            });
        }
        self.teacher.set_flat_params(&values[..t])?;
        self.student.set_flat_params(&values[t..t + s])?;
        self.decoder.set_flat_params(&values[t + s..])
    }

    pub fn encode_teacher(&self, x_t: &Matrix) -> Result<Matrix> {
        self.teacher.forward(x_t)
    }

    pub fn encode_student(&self, x_s: &Matrix) -> Result<Matrix> {
        self.student.forward(x_s)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        self.decoder.forward(z)
    }

    /// Testing-phase reconstruction `f_d(REB(·, f_s(x_s), Testing))`.
    pub fn reconstruct(&self, x_s: &Matrix) -> Result<Matrix> {
        let z_s = self.encode_student(x_s)?;
        let unused = Matrix::zeros(z_s.rows(), z_s.cols());
        let z = reb(&unused, &z_s, Phase::Testing, &unused)?;
        self.decode(&z)
    }

    pub fn infer(&self, x_s: &Matrix) -> Result<Inference> {
        split_reconstruction(&self.reconstruct(x_s)?, self.config.m)
    }

    /// Losses and gradients for one batch. `teacher_side = false` skips the
    /// backward pass through decoder and teacher.
    pub fn loss_gradients(
        &self,
        x_t: &Matrix,
        x_s: &Matrix,
        features: TrainingFeatures<'_>,
        teacher_side: bool,
    ) -> Result<LossGradients> {
        if x_t.rows() != x_s.rows() {
            return Err(Error::Shape {
                op: "loss_gradients",
                left: x_t.shape(),
                right: x_s.shape(),
            });
        }
        let cache_t = self.teacher.forward_cached(x_t)?;
        let cache_s = self.student.forward_cached(x_s)?;
        let (z_t, z_s) = (cache_t.output(), cache_s.output());
        let z = match features {
            TrainingFeatures::Perturbed(d_f) => reb(z_t, z_s, Phase::Training, d_f)?,
            TrainingFeatures::Blended(k) => blend_features(z_t, z_s, k)?,
        };
        let cache_d = self.decoder.forward_cached(&z)?;
        let recon = cache_d.output();
        let teacher_loss = reconstruction_loss(x_t, recon)?;
        let student_loss = student_loss(z_s, z_t)?;

        let scale = 2.0 / x_t.rows() as f64;
        let grad_zs = z_s.zip_with("student_grad", z_t, |s, t| scale * (s - t))?;
        let student = self.student.backward(&cache_s, &grad_zs)?.params;

        let (teacher, decoder) = if teacher_side {
            let grad_out = recon.zip_with("teacher_grad", x_t, |r, x| scale * (r - x))?;
            let dg = self.decoder.backward(&cache_d, &grad_out)?;
            let grad_zt = match features {
                TrainingFeatures::Perturbed(_) => dg.input,
                TrainingFeatures::Blended(k) => dg.input.scale(1.0 - k),
            };
            let tg = self.teacher.backward(&cache_t, &grad_zt)?;
            (Some(tg.params), Some(dg.params))
        } else {
            (None, None)
        };

        Ok(LossGradients {
            teacher_loss,
            student_loss,
            z_t: z_t.clone(),
            z_s: z_s.clone(),
            student,
            teacher,
            decoder,
        })
    }
}

pub(crate) fn split_reconstruction(full: &Matrix, m: usize) -> Result<Inference> {
    let x_cols: Vec<usize> = (0..m).collect();
    let y_cols: Vec<usize> = (m..full.cols()).collect();
    Ok(Inference {
        x_hat: full.select_columns(&x_cols)?,
        y_hat: full.select_columns(&y_cols)?,
    })
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::numcore::Layer;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = seeded_rng(seed, 9);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-2.0..2.0))
    }

    fn zeroed(model: &TsuaeModel) -> TsuaeModel {
        let mut z = model.clone();
        let n = z.flat_params().len();
        z.set_flat_params(&vec![0.0; n]).unwrap();
        z
    }

    #[test]
    fn zero_encoders_give_zero_features() {
        let model = zeroed(&TsuaeModel::new(ModelConfig::new(3, 1)).unwrap());
        assert_eq!(
            model.encode_teacher(&random(4, 4, 1)).unwrap(),
            Matrix::zeros(4, 6)
        );
        assert_eq!(
            model.encode_student(&random(4, 3, 1)).unwrap(),
            Matrix::zeros(4, 6)
        );
    }

    #[test]
    fn identity_encoders_pass_input_through() {
        let mut cfg = ModelConfig::new(3, 1);
        cfg.v = 4;
        let base = TsuaeModel::new(cfg.clone()).unwrap();
        let teacher = Network::linear(AffineLayer::new(Matrix::identity(4), vec![0.0; 4]).unwrap());
        let mut s = Matrix::zeros(4, 3);
        for i in 0..3 {
            s[(i, i)] = 1.0;
        }
        let student = Network::linear(AffineLayer::new(s, vec![0.0; 4]).unwrap());
        let model =
            TsuaeModel::from_parts(cfg, teacher, student, base.decoder().clone(), 1.0).unwrap();
        let x_t = random(5, 4, 2);
        assert_eq!(model.encode_teacher(&x_t).unwrap(), x_t);
        let x_s = random(5, 3, 3);
        let z_s = model.encode_student(&x_s).unwrap();
        assert_eq!(z_s.select_columns(&[0, 1, 2]).unwrap(), x_s);
        assert_eq!(z_s.column(3), vec![0.0; 5]);
    }

    #[test]
    fn encoders_match_affine_oracle() {
        let model = TsuaeModel::new(ModelConfig::new(5, 2)).unwrap();
        let x_t = random(8, 7, 4);
        let teacher = model.teacher().affine_layers().next().unwrap();
        for (i, row) in model.encode_teacher(&x_t).unwrap().row_iter().enumerate() {
            for (o, &value) in row.iter().enumerate() {
                let expected: f64 = teacher.bias()[o]
                    + (0..7)
                        .map(|k| teacher.weight()[(o, k)] * x_t[(i, k)])
                        .sum::<f64>();
                assert!((value - expected).abs() < 1e-13);
            }
        }
        let x_s = x_t.select_columns(&[0, 1, 2, 3, 4]).unwrap();
        let student = model.student().affine_layers().next().unwrap();
        assert_eq!(
            model.encode_student(&x_s).unwrap(),
            student.forward(&x_s).unwrap()
        );
    }

    #[test]
    fn width_mismatch_is_a_shape_error() {
        let model = TsuaeModel::new(ModelConfig::new(5, 2)).unwrap();
        assert!(matches!(
            model.encode_teacher(&Matrix::zeros(2, 5)),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            model.encode_student(&Matrix::zeros(2, 7)),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            model.decode(&Matrix::zeros(2, 5)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn zero_decoder_outputs_its_bias() {
        let cfg = ModelConfig::new(2, 1);
        let base = TsuaeModel::new(cfg.clone()).unwrap();
        let decoder = Network::new(vec![
            Layer::Affine(AffineLayer::zeros(6, 16)),
            Layer::Tanh,
            Layer::Affine(AffineLayer::new(Matrix::zeros(3, 16), vec![0.5, -1.0, 2.0]).unwrap()),
        ])
        .unwrap();
        let model = TsuaeModel::from_parts(
            cfg,
            base.teacher().clone(),
            base.student().clone(),
            decoder,
            1.0,
        )
        .unwrap();
        let out = model.decode(&random(4, 6, 5)).unwrap();
        for row in out.row_iter() {
            assert_eq!(row, &[0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn hand_built_scalar_model() {
        // Every weight 1, every bias 0: decode(0) = 0 and infer(x) = tanh(x).
        let mut cfg = ModelConfig::new(1, 1);
        cfg.v = 1;
        cfg.n_h = 1;
        let unit = |i, o| AffineLayer::new(Matrix::filled(o, i, 1.0), vec![0.0; o]).unwrap();
        let decoder = Network::new(vec![
            Layer::Affine(unit(1, 1)),
            Layer::Tanh,
            Layer::Affine(unit(1, 2)),
        ])
        .unwrap();
        let model = TsuaeModel::from_parts(
            cfg,
            Network::linear(unit(2, 1)),
            Network::linear(unit(1, 1)),
            decoder,
            1.0,
        )
        .unwrap();
        assert_eq!(
            model.decode(&Matrix::zeros(1, 1)).unwrap(),
            Matrix::zeros(1, 2)
        );
        let out = model.infer(&Matrix::filled(1, 1, 0.5)).unwrap();
        let expected = 0.5f64.tanh();
        assert_eq!(out.x_hat.as_slice(), &[expected]);
        assert_eq!(out.y_hat.as_slice(), &[expected]);
    }

    #[test]
    fn decoder_matches_layer_composition() {
        let model = TsuaeModel::new(ModelConfig::new(4, 1)).unwrap();
        let z = random(6, 6, 8);
        let layers: Vec<_> = model.decoder().affine_layers().collect();
        let hidden = layers[0].forward(&z).unwrap().map(f64::tanh);
        let expected = layers[1].forward(&hidden).unwrap();
        assert_eq!(model.decode(&z).unwrap(), expected);
    }

    #[test]
    fn infer_is_decode_of_student_features() {
        let model = TsuaeModel::new(ModelConfig::new(4, 2)).unwrap();
        let x = random(9, 4, 10);
        let direct = model.decode(&model.encode_student(&x).unwrap()).unwrap();
        let out = model.infer(&x).unwrap();
        assert_eq!(out.x_hat.hstack(&out.y_hat).unwrap(), direct);
        assert_eq!(out, model.infer(&x).unwrap());
        assert_eq!(out.x_hat.cols(), 4);
        assert_eq!(out.y_hat.cols(), 2);
    }

    #[test]
    fn exact_inverse_decoder_gives_zero_teacher_loss() {
        let mut cfg = ModelConfig::new(1, 1);
        cfg.v = 2;
        cfg.n_h = 2;
        let a = [0.2f64, -0.4];
        let x_t = Matrix::from_rows(&[[a[0].tanh(), a[1].tanh()]]).unwrap();
        let id = || AffineLayer::new(Matrix::identity(2), vec![0.0; 2]).unwrap();
        let decoder =
            Network::new(vec![Layer::Affine(id()), Layer::Tanh, Layer::Affine(id())]).unwrap();
        let teacher = Network::linear(AffineLayer::new(Matrix::zeros(2, 2), a.to_vec()).unwrap());
        let student = Network::linear(AffineLayer::zeros(1, 2));
        let model = TsuaeModel::from_parts(cfg, teacher, student, decoder, 0.0).unwrap();
        let x_s = x_t.select_columns(&[0]).unwrap();
        let d_f = Matrix::zeros(1, 2);
        let g = model
            .loss_gradients(&x_t, &x_s, TrainingFeatures::Perturbed(&d_f), true)
            .unwrap();
        assert_eq!(g.teacher_loss, 0.0);
    }

    #[test]
    fn teacher_loss_matches_per_sample_oracle() {
        let model = TsuaeModel::new(ModelConfig::new(3, 2)).unwrap();
        let x_t = random(7, 5, 11);
        let x_s = x_t.select_columns(&[0, 1, 2]).unwrap();
        let d_f = random(7, 6, 12).scale(0.1);
        let g = model
            .loss_gradients(&x_t, &x_s, TrainingFeatures::Perturbed(&d_f), true)
            .unwrap();
        let z = model.encode_teacher(&x_t).unwrap().add(&d_f).unwrap();
        let recon = model.decode(&z).unwrap();
        let mut total = 0.0;
        for i in 0..7 {
            let mut sq = 0.0;
            for j in 0..5 {
                sq += (x_t[(i, j)] - recon[(i, j)]).powi(2);
            }
            total += sq;
        }
        assert!((g.teacher_loss - total / 7.0).abs() < 1e-12);
    }
}
