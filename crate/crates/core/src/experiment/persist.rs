//! Versioned text format for fitted models.
//!
//! ```text
//! tsuae-model 1
//! meta <key> <value>
//! tensor <name> <rows> <cols>
//! <one line of 16-digit hex f64 bit patterns per row>
//! checksum <sha256 of everything above>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::baselines::{
    FittedMethod, FittedModel, MethodId, PcaModel, PlsModel, RidgeModel, SaeModel,
};
use crate::data::Scaler;
use crate::error::{Error, Result};
use crate::monitor::ThresholdPair;
use crate::numcore::{AffineLayer, Layer, Matrix, Network};
use crate::tsuae::{LearningRateSchedule, ModelConfig, TsuaeModel};

pub const FORMAT_MAGIC: &str = "tsuae-model";
pub const FORMAT_VERSION: &str = "1";

/// Everything needed to score new raw data.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub method: FittedMethod,
    /// Fitted on process columns followed by quality columns.
    pub scaler: Scaler,
    pub process_names: Vec<String>,
    pub quality_names: Vec<String>,
    pub thresholds: ThresholdPair,
}

#[derive(Default)]
struct Bundle {
    meta: BTreeMap<String, String>,
    tensors: BTreeMap<String, Matrix>,
}

fn hex_f64(v: f64) -> String {
    format!("{:016x}", v.to_bits())
}

fn parse_hex_f64(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16)
        .map(f64::from_bits)
        .map_err(|_| Error::Format(format!("bad hex float `{s}`")))
}

impl Bundle {
    fn put(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    fn put_f64(&mut self, key: &str, value: f64) {
        self.meta.insert(key.to_string(), hex_f64(value));
    }

    fn put_vec(&mut self, key: &str, values: &[f64]) {
        self.tensors.insert(
            key.to_string(),
            Matrix::from_vec(1, values.len(), values.to_vec()).expect("row"),
        );
    }

    fn put_matrix(&mut self, key: &str, m: &Matrix) {
        self.tensors.insert(key.to_string(), m.clone());
    }

    fn put_network(&mut self, prefix: &str, net: &Network) {
        let kinds: Vec<&str> = net
            .layers()
            .iter()
            .map(|l| match l {
                Layer::Affine(_) => "affine",
                Layer::Tanh => "tanh",
            })
            .collect();
        self.put(&format!("{prefix}.layers"), kinds.join(","));
        for (i, layer) in net.layers().iter().enumerate() {
            if let Layer::Affine(a) = layer {
                self.put_matrix(&format!("{prefix}.{i}.weight"), a.weight());
                self.put_vec(&format!("{prefix}.{i}.bias"), a.bias());
            }
        }
    }

    fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("missing field `{key}`")))
    }

    fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad value for `{key}`")))
    }

    fn get_f64(&self, key: &str) -> Result<f64> {
        parse_hex_f64(self.get(key)?)
    }

    fn get_list(&self, key: &str) -> Result<Vec<String>> {
        let v = self.get(key)?;
        Ok(if v.is_empty() {
            Vec::new()
        } else {
            v.split(',').map(str::to_string).collect()
        })
    }

    fn get_matrix(&self, key: &str) -> Result<Matrix> {
        self.tensors
            .get(key)
            .cloned()
            .ok_or_else(|| Error::Format(format!("missing tensor `{key}`")))
    }

    fn get_vec(&self, key: &str) -> Result<Vec<f64>> {
        Ok(self.get_matrix(key)?.into_vec())
    }

    fn get_network(&self, prefix: &str) -> Result<Network> {
        let mut layers = Vec::new();
        for (i, kind) in self
            .get_list(&format!("{prefix}.layers"))?
            .iter()
            .enumerate()
        {
            layers.push(match kind.as_str() {
                "affine" => Layer::Affine(AffineLayer::new(
                    self.get_matrix(&format!("{prefix}.{i}.weight"))?,
                    self.get_vec(&format!("{prefix}.{i}.bias"))?,
                )?),
                "tanh" => Layer::Tanh,
                other => return Err(Error::Format(format!("unknown layer kind `{other}`"))),
            });
        }
        Network::new(layers)
    }

    fn render(&self) -> String {
        let mut out = format!("{FORMAT_MAGIC} {FORMAT_VERSION}\n");
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}").expect("string write");
        }
        for (k, m) in &self.tensors {
            writeln!(out, "tensor {k} {} {}", m.rows(), m.cols()).expect("string write");
            for row in m.row_iter() {
                let line: Vec<String> = row.iter().map(|v| hex_f64(*v)).collect();
                writeln!(out, "{}", line.join(" ")).expect("string write");
            }
        }
        let digest = hex::encode(Sha256::digest(out.as_bytes()));
        writeln!(out, "checksum {digest}").expect("string write");
        out
    }

    fn parse(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or_default();
        let mut parts = header.split_whitespace();
        if parts.next() != Some(FORMAT_MAGIC) {
            return Err(Error::Format("not a model file".into()));
        }
        let version = parts.next().unwrap_or_default();
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion(version.to_string()));
        }

        let body_end = text
            .trim_end_matches('\n')
            .rfind('\n')
            .map(|i| i + 1)
            .ok_or_else(|| Error::Checksum("file has no checksum line".into()))?;
        let (body, tail) = text.split_at(body_end);
        let expected = tail
            .trim_end()
            .strip_prefix("checksum ")
            .ok_or_else(|| Error::Checksum("file has no checksum line (truncated?)".into()))?;
        let actual = hex::encode(Sha256::digest(body.as_bytes()));
        if actual != expected {
            return Err(Error::Checksum(format!(
                "expected {expected}, computed {actual}"
            )));
        }

        let mut bundle = Bundle::default();
        let mut lines = body.lines().skip(1);
        while let Some(line) = lines.next() {
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                bundle.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("tensor ") {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                let [name, rows, cols] = fields[..] else {
                    return Err(Error::Format(format!("bad tensor header `{line}`")));
                };
                let dim = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Format(format!("bad tensor header `{line}`")))
                };
                let (rows, cols) = (dim(rows)?, dim(cols)?);
                let mut values = Vec::with_capacity(rows * cols);
                for _ in 0..rows {
                    let row = lines
                        .next()
                        .ok_or_else(|| Error::Format(format!("tensor `{name}` is short")))?;
                    for tok in row.split_whitespace() {
                        values.push(parse_hex_f64(tok)?);
                    }
                }
                bundle
                    .tensors
                    .insert(name.to_string(), Matrix::from_vec(rows, cols, values)?);
            } else {
                return Err(Error::Format(format!("unexpected line `{line}`")));
            }
        }
        Ok(bundle)
    }
}

fn put_model_config(b: &mut Bundle, cfg: &ModelConfig) {
    b.put("config.m", cfg.m);
    b.put("config.p", cfg.p);
    b.put("config.v", cfg.v);
    b.put("config.n_h", cfg.n_h);
    b.put("config.iterations", cfg.iterations);
    b.put_f64("config.stop_tolerance", cfg.stop_tolerance);
    b.put("config.stop_window", cfg.stop_window);
    b.put("config.seed", cfg.seed);
    b.put_f64("config.initial_sigma2", cfg.initial_sigma2);
    b.put_f64("config.sigma2_floor", cfg.sigma2_floor);
    b.put_f64("config.student_learning_rate", cfg.student_learning_rate);
    b.put_f64("config.teacher_learning_rate", cfg.teacher_learning_rate);
    match cfg.schedule {
        LearningRateSchedule::Constant => b.put("config.schedule", "constant"),
        LearningRateSchedule::Cosine { final_fraction } => b.put(
            "config.schedule",
            format!("cosine:{}", hex_f64(final_fraction)),
        ),
    }
    b.put(
        "config.batch_size",
        cfg.batch_size.map_or("full".to_string(), |n| n.to_string()),
    );
}

fn get_model_config(b: &Bundle) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::new(b.get_parsed("config.m")?, b.get_parsed("config.p")?);
    cfg.v = b.get_parsed("config.v")?;
    cfg.n_h = b.get_parsed("config.n_h")?;
    cfg.iterations = b.get_parsed("config.iterations")?;
    cfg.stop_tolerance = b.get_f64("config.stop_tolerance")?;
    cfg.stop_window = b.get_parsed("config.stop_window")?;
    cfg.seed = b.get_parsed("config.seed")?;
    cfg.initial_sigma2 = b.get_f64("config.initial_sigma2")?;
    cfg.sigma2_floor = b.get_f64("config.sigma2_floor")?;
    cfg.student_learning_rate = b.get_f64("config.student_learning_rate")?;
    cfg.teacher_learning_rate = b.get_f64("config.teacher_learning_rate")?;
    cfg.schedule = match b.get("config.schedule")? {
        "constant" => LearningRateSchedule::Constant,
        other => match other.strip_prefix("cosine:") {
            Some(f) => LearningRateSchedule::Cosine {
                final_fraction: parse_hex_f64(f)?,
            },
            None => return Err(Error::Format(format!("unknown schedule `{other}`"))),
        },
    };
    cfg.batch_size = match b.get("config.batch_size")? {
        "full" => None,
        n => Some(
            n.parse()
                .map_err(|_| Error::Format(format!("bad batch size `{n}`")))?,
        ),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn put_threshold(b: &mut Bundle, key: &str, value: Option<f64>) {
    b.put(key, value.map_or("none".to_string(), hex_f64));
}

fn get_threshold(b: &Bundle, key: &str) -> Result<Option<f64>> {
    match b.get(key)? {
        "none" => Ok(None),
        v => parse_hex_f64(v).map(Some),
    }
}

fn encode(saved: &SavedModel) -> Bundle {
    let mut b = Bundle::default();
    b.put("method", saved.method.id);
    b.put("names.process", saved.process_names.join(","));
    b.put("names.quality", saved.quality_names.join(","));
    b.put_vec("scaler.means", saved.scaler.means());
    b.put_vec("scaler.stds", saved.scaler.stds());
    b.put_f64("thresholds.confidence", saved.thresholds.confidence);
    put_threshold(&mut b, "thresholds.process", saved.thresholds.process);
    put_threshold(&mut b, "thresholds.quality", saved.thresholds.quality);
    match &saved.method.model {
        FittedModel::Pca(m) => {
            b.put_vec("pca.means", &m.means);
            b.put_matrix("pca.loadings", &m.loadings);
            b.put_vec("pca.eigenvalues", &m.eigenvalues);
        }
        FittedModel::Pls(m) => {
            b.put_vec("pls.x_means", &m.x_means);
            b.put_vec("pls.x_scales", &m.x_scales);
            b.put_vec("pls.y_means", &m.y_means);
            b.put_vec("pls.y_scales", &m.y_scales);
            b.put_matrix("pls.weights", &m.weights);
            b.put_matrix("pls.x_loadings", &m.x_loadings);
            b.put_matrix("pls.y_loadings", &m.y_loadings);
            b.put_matrix("pls.coefficients", &m.coefficients);
        }
        FittedModel::Rr(m) => {
            b.put_matrix("rr.coefficients", &m.coefficients);
            b.put_vec("rr.intercept", &m.intercept);
            b.put_f64("rr.lambda", m.lambda);
        }
        FittedModel::Sae(m) => {
            b.put_network("sae.encoder", m.encoder());
            b.put_network("sae.decoder", m.decoder());
        }
        FittedModel::TeacherStudent(m) => {
            put_model_config(&mut b, m.config());
            b.put_f64("sigma2", m.sigma2());
            b.put_network("teacher", m.teacher());
            b.put_network("student", m.student());
            b.put_network("decoder", m.decoder());
        }
    }
    b
}

fn decode(b: &Bundle) -> Result<SavedModel> {
    let id: MethodId = b.get("method")?.parse()?;
    let process_names = b.get_list("names.process")?;
    let quality_names = b.get_list("names.quality")?;
    let scaler = Scaler::from_parts(
        process_names
            .iter()
            .chain(&quality_names)
            .cloned()
            .collect(),
        b.get_vec("scaler.means")?,
        b.get_vec("scaler.stds")?,
    )?;
    let thresholds = ThresholdPair {
        process: get_threshold(b, "thresholds.process")?,
        quality: get_threshold(b, "thresholds.quality")?,
        confidence: b.get_f64("thresholds.confidence")?,
    };
    let model = match id {
        MethodId::Pca => FittedModel::Pca(PcaModel {
            means: b.get_vec("pca.means")?,
            loadings: b.get_matrix("pca.loadings")?,
            eigenvalues: b.get_vec("pca.eigenvalues")?,
        }),
        MethodId::Pls => FittedModel::Pls(PlsModel {
            x_means: b.get_vec("pls.x_means")?,
            x_scales: b.get_vec("pls.x_scales")?,
            y_means: b.get_vec("pls.y_means")?,
            y_scales: b.get_vec("pls.y_scales")?,
            weights: b.get_matrix("pls.weights")?,
            x_loadings: b.get_matrix("pls.x_loadings")?,
            y_loadings: b.get_matrix("pls.y_loadings")?,
            coefficients: b.get_matrix("pls.coefficients")?,
        }),
        MethodId::Rr => FittedModel::Rr(RidgeModel {
            coefficients: b.get_matrix("rr.coefficients")?,
            intercept: b.get_vec("rr.intercept")?,
            lambda: b.get_f64("rr.lambda")?,
        }),
        MethodId::Sae => FittedModel::Sae(SaeModel::from_parts(
            b.get_network("sae.encoder")?,
            b.get_network("sae.decoder")?,
        )?),
        MethodId::Tssae | MethodId::Tsuae | MethodId::TssaeNf(_) => {
            FittedModel::TeacherStudent(TsuaeModel::from_parts(
                get_model_config(b)?,
                b.get_network("teacher")?,
                b.get_network("student")?,
                b.get_network("decoder")?,
                b.get_f64("sigma2")?,
            )?)
        }
    };
    Ok(SavedModel {
        method: FittedMethod { id, model },
        scaler,
        process_names,
        quality_names,
        thresholds,
    })
}

pub fn model_to_string(saved: &SavedModel) -> String {
    encode(saved).render()
}

pub fn model_from_str(text: &str) -> Result<SavedModel> {
    decode(&Bundle::parse(text)?)
}

pub fn save_model(saved: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_string(saved)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
