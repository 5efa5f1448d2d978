//! Seeded synthetic scenes drawn from per-class Gaussians.
//!
//! Each pixel picks a class by its pixel fraction (one uniform draw) and
//! then a spectrum `mean + L z`, where `L` is the lower Cholesky factor of
//! the class covariance and `z` holds standard normals. Every draw comes
//! from one ChaCha8 stream seeded with [`SceneSpec::seed`], pixels in
//! row-major order, so a spec and seed fix the output exactly.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{ClassLegend, ClassificationMap, MultibandImage, SampleSet};
use crate::linalg::{Cholesky, Matrix};
use crate::stats::{ClassStatistics, StatisticsSet};
use crate::{ClassId, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub name: String,
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub n_bands: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub classes: Vec<ClassSpec>,
}

/// Everything [`generate_scene`] produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: MultibandImage,
    pub truth: ClassificationMap,
    /// Every pixel, in row-major order, labelled with its generating class.
    pub samples: SampleSet,
    pub legend: ClassLegend,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_bands == 0 || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("scene dimensions must be positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidArgument("scene has no classes".into()));
        }
        let mut total = 0.0;
        for c in &self.classes {
            if c.mean.len() != self.n_bands || c.covariance.dim() != self.n_bands {
                return Err(Error::DimensionMismatch {
                    expected: self.n_bands,
                    actual: if c.mean.len() != self.n_bands {
                        c.mean.len()
                    } else {
                        c.covariance.dim()
                    },
                });
            }
            if c.mean.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("class {:?} has a non-finite mean", c.name)));
            }
            if !(c.fraction > 0.0 && c.fraction.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "class {:?} has fraction {}",
                    c.name, c.fraction
                )));
            }
            if !c.covariance.is_symmetric(1e-12) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "class {:?} covariance is not symmetric",
                    c.name
                )));
            }
            Cholesky::factor(&c.covariance)?;
            total += c.fraction;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(alloc::format!("class fractions sum to {total}, not 1")));
        }
        // names must form a valid legend
        ClassLegend::from_names(self.classes.iter().map(|c| c.name.as_str()))
            .and_then(|l| {
                if l.len() == self.classes.len() {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("duplicate class names".into()))
                }
            })
    }

    pub fn legend(&self) -> Result<ClassLegend> {
        ClassLegend::from_names(self.classes.iter().map(|c| c.name.as_str()))
    }

    /// The generating parameters as class statistics, in legend order.
    pub fn true_statistics(&self) -> Result<StatisticsSet> {
        let legend = self.legend()?;
        let mut stats = Vec::with_capacity(self.classes.len());
        for (id, name) in legend.iter() {
            let c = self
                .classes
                .iter()
                .find(|c| c.name == name)
                .expect("legend built from these names");
            stats.push(ClassStatistics::new(id, 0, c.mean.clone(), c.covariance.clone())?);
        }
        StatisticsSet::new(stats)
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<SyntheticScene> {
    spec.validate()?;
    let legend = spec.legend()?;
    let d = spec.n_bands;
    let n_pixels = spec.width * spec.height;

    let ids: Vec<ClassId> = spec
        .classes
        .iter()
        .map(|c| legend.id_of(&c.name).expect("legend built from these names"))
        .collect();
    let factors = spec
        .classes
        .iter()
        .map(|c| Cholesky::factor(&c.covariance))
        .collect::<Result<Vec<_>>>()?;
    let mut cumulative = Vec::with_capacity(spec.classes.len());
    let mut acc = 0.0;
    for c in &spec.classes {
        acc += c.fraction;
        cumulative.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut data = vec![0f32; n_pixels * d];
    let mut labels = Vec::with_capacity(n_pixels);
    let mut features = Vec::with_capacity(n_pixels * d);
    let mut z = vec![0.0f64; d];
    for p in 0..n_pixels {
        let u: f64 = rng.random::<f64>() * acc;
        let ci = cumulative.iter().position(|&c| u < c).unwrap_or(spec.classes.len() - 1);
        let class = &spec.classes[ci];
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let l = factors[ci].lower();
        for b in 0..d {
            let mut x = class.mean[b];
            for (j, zj) in z.iter().enumerate().take(b + 1) {
                x += l[(b, j)] * zj;
            }
            let stored = x as f32;
            if !stored.is_finite() {
                return Err(Error::NonFinite(b * n_pixels + p));
            }
            data[b * n_pixels + p] = stored;
            features.push(f64::from(stored));
        }
        labels.push(ids[ci]);
    }

    let image = MultibandImage::new(spec.width, spec.height, d, data)?;
    let truth = ClassificationMap::new(spec.width, spec.height, labels.clone(), legend.clone())?;
    let samples = SampleSet::from_parts(d, features, labels)?;
    Ok(SyntheticScene {
        image,
        truth,
        samples,
        legend,
    })
}

/// `D R D` with `R_ij = rho^|i-j|` and `D = diag(std)`.
pub fn banded_covariance(std: &[f64], rho: f64) -> Matrix {
    let d = std.len();
    let mut m = Matrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let lag = i.abs_diff(j) as i32;
            m[(i, j)] = std[i] * std[j] * libm::pow(rho, f64::from(lag));
        }
    }
    m
}

/// Six-band, five-class scene loosely modelled on optical satellite bands
/// over an urban wetland: water, built-up land, thick and light swamp and
/// other vegetation, with deliberately overlapping vegetated classes.
pub fn builtin_scene_spec(seed: u64) -> SceneSpec {
    let class = |name: &str, mean: [f64; 6], std: [f64; 6], rho: f64, fraction: f64| ClassSpec {
        name: name.into(),
        mean: mean.to_vec(),
        covariance: banded_covariance(&std, rho),
        fraction,
    };
    SceneSpec {
        n_bands: 6,
        width: 40,
        height: 40,
        seed,
        classes: vec![
            class("water", [68.0, 27.0, 24.0, 16.0, 9.0, 5.0], [3.0, 2.0, 2.5, 3.0, 3.0, 2.0], 0.5, 0.15),
            class("built-up", [92.0, 43.0, 52.0, 48.0, 74.0, 50.0], [7.0, 5.0, 7.0, 6.0, 10.0, 8.0], 0.7, 0.2),
            class("thick swamp", [71.0, 30.0, 29.0, 70.0, 52.0, 21.0], [3.5, 2.5, 3.5, 8.0, 7.0, 4.0], 0.5, 0.2),
            class("light swamp", [74.0, 33.0, 34.0, 62.0, 60.0, 27.0], [3.5, 2.5, 3.5, 8.0, 7.0, 4.5], 0.5, 0.2),
            class("vegetation", [73.0, 32.0, 31.0, 78.0, 64.0, 26.0], [3.5, 2.5, 3.5, 9.0, 7.0, 4.5], 0.5, 0.25),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class(mean_gap: f64, seed: u64) -> SceneSpec {
        SceneSpec {
            n_bands: 2,
            width: 30,
            height: 20,
            seed,
            classes: vec![
                ClassSpec {
                    name: "a".into(),
                    mean: vec![0.0, 0.0],
                    covariance: Matrix::identity(2),
                    fraction: 0.5,
                },
                ClassSpec {
                    name: "b".into(),
                    mean: vec![mean_gap, 0.0],
                    covariance: Matrix::identity(2),
                    fraction: 0.5,
                },
            ],
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let a = generate_scene(&two_class(3.0, 11)).unwrap();
        let b = generate_scene(&two_class(3.0, 11)).unwrap();
        assert_eq!(a, b);
        let c = generate_scene(&two_class(3.0, 12)).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn outputs_are_consistent() {
        let s = generate_scene(&two_class(3.0, 1)).unwrap();
        assert_eq!(s.samples.len(), 600);
        assert_eq!(s.truth.labels(), s.samples.labels());
        for p in [0usize, 17, 599] {
            assert_eq!(s.image.pixel(p), s.samples.features(p));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = two_class(1.0, 0);
        spec.classes[0].fraction = 0.4;
        assert!(generate_scene(&spec).is_err());

        let mut spec = two_class(1.0, 0);
        spec.classes[1].covariance = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]).unwrap();
        assert_eq!(generate_scene(&spec).unwrap_err(), Error::NotPositiveDefinite);

        let mut spec = two_class(1.0, 0);
        spec.classes[1].name = "a".into();
        assert!(generate_scene(&spec).is_err());
    }

    #[test]
    fn legend_order_is_by_name() {
        let mut spec = two_class(4.0, 3);
        spec.classes[0].name = "zeta".into();
        let s = generate_scene(&spec).unwrap();
        assert_eq!(s.legend.names(), &["b".to_string(), "zeta".to_string()]);
        let stats = spec.true_statistics().unwrap();
        assert_eq!(stats.class(0).mean, vec![4.0, 0.0]);
    }

    #[test]
    fn builtin_scene_spec_is_valid() {
        let spec = builtin_scene_spec(0);
        spec.validate().unwrap();
        assert_eq!(spec.n_bands, 6);
        assert_eq!(spec.classes.len(), 5);
    }

    use alloc::string::ToString;
}
