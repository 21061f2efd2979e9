//! Numerical benchmark plant: six latent Gaussians drive twenty process
//! variables through a random linear map, and one quality variable
//! `y = (z₁+z₂)² + exp((z₃−z₄)/2) + sin(z₅)`.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::table::DataMatrix;
use crate::error::{Error, Result};
use crate::numcore::Matrix;
use crate::tsuae::seeded_rng;

const MAP_STREAM: u64 = 10;
const SAMPLE_STREAM: u64 = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub latent_dim: usize,
    pub m: usize,
    pub noise_variance: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            latent_dim: 6,
            m: 20,
            noise_variance: 0.01,
            samples: 1000,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.latent_dim < 5 {
            return Err(Error::Config(format!(
                "the quality function reads five latent variables, latent_dim is {}",
                self.latent_dim
            )));
        }
        if self.m == 0 || self.samples == 0 {
            return Err(Error::Config(
                "process dimension and sample count must be positive".into(),
            ));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Config(format!(
                "noise variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

pub fn quality_function(z: &[f64]) -> f64 {
    (z[0] + z[1]).powi(2) + ((z[2] - z[3]) / 2.0).exp() + z[4].sin()
}

pub fn process_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

/// One plant: `W` is drawn once from the seed; every call to
/// [`NumericalPlant::draw`] continues the same sample stream.
#[derive(Debug, Clone)]
pub struct NumericalPlant {
    spec: GeneratorSpec,
    w: Matrix,
    rng: ChaCha8Rng,
}

impl NumericalPlant {
    pub fn new(spec: GeneratorSpec) -> Result<Self> {
        spec.validate()?;
        let mut map_rng = seeded_rng(spec.seed, MAP_STREAM);
        let w = Matrix::from_fn(spec.m, spec.latent_dim, |_, _| {
            StandardNormal.sample(&mut map_rng)
        });
        let rng = seeded_rng(spec.seed, SAMPLE_STREAM);
        Ok(Self { spec, w, rng })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// The `m × latent_dim` mapping.
    pub fn mapping(&self) -> &Matrix {
        &self.w
    }

    /// Next `n` samples.
    pub fn draw(&mut self, n: usize) -> DataMatrix {
        let latent = self.spec.latent_dim;
        let m = self.spec.m;
        let std = self.spec.noise_variance.sqrt();
        let mut z = Matrix::zeros(n, latent);
        let mut e = Matrix::zeros(n, m);
        for i in 0..n {
            for v in z.row_mut(i) {
                *v = StandardNormal.sample(&mut self.rng);
            }
            if std > 0.0 {
                let noise = Normal::new(0.0, std).expect("finite std");
                for v in e.row_mut(i) {
                    *v = noise.sample(&mut self.rng);
                }
            }
        }
        self.sample_with(&z, &e).expect("shapes built to match")
    }

    /// `x = W z + e`, `y = quality_function(z)` for given latent and noise rows.
    pub fn sample_with(&self, z: &Matrix, e: &Matrix) -> Result<DataMatrix> {
        if z.cols() != self.spec.latent_dim || e.cols() != self.spec.m || z.rows() != e.rows() {
            return Err(Error::Shape {
                op: "sample_with",
                left: z.shape(),
                right: e.shape(),
            });
        }
        let x = z.matmul(&self.w.transpose())?.add(e)?;
        let y = Matrix::from_fn(z.rows(), 1, |i, _| quality_function(z.row(i)));
        DataMatrix::from_parts(&x, &y, process_names(self.spec.m), vec!["y".to_string()])
    }
}

/// `spec.samples` samples from a fresh plant.
pub fn generate_numerical(spec: &GeneratorSpec) -> Result<DataMatrix> {
    let mut plant = NumericalPlant::new(spec.clone())?;
    Ok(plant.draw(spec.samples))
}

/// Training series and the two (not yet faulted) monitoring series, drawn in
/// that order from one plant.
#[derive(Debug, Clone)]
pub struct BenchmarkSeries {
    pub train: DataMatrix,
    pub monitor: Vec<DataMatrix>,
}

pub fn generate_benchmark(
    spec: &GeneratorSpec,
    monitoring_series: usize,
) -> Result<BenchmarkSeries> {
    let mut plant = NumericalPlant::new(spec.clone())?;
    let train = plant.draw(spec.samples);
    let monitor = (0..monitoring_series)
        .map(|_| plant.draw(spec.samples))
        .collect();
    Ok(BenchmarkSeries { train, monitor })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_roles() {
        let d = generate_numerical(&GeneratorSpec::default()).unwrap();
        assert_eq!((d.rows(), d.cols()), (1000, 21));
        assert_eq!(d.process_indices().len(), 20);
        assert_eq!(d.quality_indices(), vec![20]);
    }

    #[test]
    fn zero_latent_and_noise_give_unit_quality() {
        let plant = NumericalPlant::new(GeneratorSpec::default()).unwrap();
        let d = plant
            .sample_with(&Matrix::zeros(2, 6), &Matrix::zeros(2, 20))
            .unwrap();
        assert_eq!(d.process(), Matrix::zeros(2, 20));
        assert_eq!(d.quality().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn moments_match_closed_form() {
        let spec = GeneratorSpec {
            samples: 100_000,
            seed: 3,
            ..GeneratorSpec::default()
        };
        let d = generate_numerical(&spec).unwrap();
        let means = d.values().column_means();
        for &mx in &means[..20] {
            assert!(mx.abs() < 0.05, "process mean {mx}");
        }
        // E[(z1+z2)^2] = 2, E[exp(N(0, 1/2))] = exp(1/4), E[sin z5] = 0.
        let expected = 2.0 + 0.25f64.exp();
        assert!(
            (means[20] - expected).abs() < 0.1,
            "quality mean {}",
            means[20]
        );
    }

    #[test]
    fn same_seed_same_data_and_shared_mapping() {
        let spec = GeneratorSpec {
            samples: 50,
            ..GeneratorSpec::default()
        };
        assert_eq!(
            generate_numerical(&spec).unwrap(),
            generate_numerical(&spec).unwrap()
        );
        let a = NumericalPlant::new(spec.clone()).unwrap();
        let mut b = NumericalPlant::new(spec).unwrap();
        b.draw(50);
        assert_eq!(a.mapping(), b.mapping());
        let series = generate_benchmark(&a.spec().clone(), 2).unwrap();
        assert_ne!(series.train, series.monitor[0]);
        assert_ne!(series.monitor[0], series.monitor[1]);
    }
}
