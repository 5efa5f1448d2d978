//! Gaussian-kernel support vector machines.
//!
//! Binary machines are trained with sequential minimal optimisation
//! ([`smo`]); multiclass problems use one machine per class pair with
//! max-wins voting ([`multiclass`]). A maximum-likelihood Gaussian
//! classifier ([`baseline`]) serves as a reference model.

use alloc::vec::Vec;

use crate::dataset::SampleSet;
use crate::{Error, Result};

pub mod baseline;
pub mod multiclass;
pub mod smo;

pub use baseline::GaussianMlClassifier;
pub use multiclass::{argmax_votes, train_multiclass, MulticlassSvm};
pub use smo::{train_binary_svm, TrainedBinarySvm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// RBF width; `None` picks `1 / (d * mean scaled feature variance)`.
    pub gamma: Option<f64>,
    /// KKT tolerance.
    pub tol: f64,
    /// Consecutive optimisation steps allowed to leave every multiplier
    /// unchanged before training stops unconverged.
    pub max_passes: usize,
    /// Hard cap on pair updates.
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10,
            max_iter: 10_000,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.c) {
            return Err(Error::InvalidArgument(alloc::format!("C must be positive, got {}", self.c)));
        }
        if let Some(g) = self.gamma {
            if !positive(g) {
                return Err(Error::InvalidArgument(alloc::format!("gamma must be positive, got {g}")));
            }
        }
        if !positive(self.tol) {
            return Err(Error::InvalidArgument(alloc::format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_passes == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_passes and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// `exp(-gamma * |x - y|^2)`
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    libm::exp(-gamma * sq)
}

/// Per-feature standardisation fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Features with zero training variance (their `std` is forced to 1).
    pub constant: Vec<bool>,
}

impl FeatureScaler {
    /// Population mean and standard deviation per feature.
    pub fn fit(train: &SampleSet) -> Result<Self> {
        let n = train.len();
        if n < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "scaler needs at least 2 samples, got {n}"
            )));
        }
        let d = train.n_bands();
        let mut mean = alloc::vec![0.0; d];
        for (x, _) in train.iter() {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = alloc::vec![0.0; d];
        for (x, _) in train.iter() {
            for j in 0..d {
                let c = x[j] - mean[j];
                var[j] += c * c;
            }
        }
        let mut std = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for v in var {
            let s = libm::sqrt(v / n as f64);
            if s > 0.0 && s.is_finite() {
                std.push(s);
                constant.push(false);
            } else {
                std.push(1.0);
                constant.push(true);
            }
        }
        Ok(Self { mean, std, constant })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) {
        for j in 0..self.mean.len() {
            out[j] = (x[j] - self.mean[j]) / self.std[j];
        }
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; x.len()];
        self.transform_into(x, &mut out);
        out
    }

    pub fn transform_set(&self, set: &SampleSet) -> SampleSet {
        let mut out = SampleSet::new(set.n_bands());
        let mut buf = alloc::vec![0.0; set.n_bands()];
        for (x, l) in set.iter() {
            self.transform_into(x, &mut buf);
            // finite in, finite out: std > 0
            out.push(&buf, l).expect("scaled sample keeps its dimension");
        }
        out
    }

    /// Default RBF width for data scaled by this scaler.
    pub fn default_gamma(&self) -> f64 {
        let d = self.dim() as f64;
        let varying = self.constant.iter().filter(|c| !**c).count() as f64;
        let mean_var = varying / d;
        if mean_var > 0.0 {
            1.0 / (d * mean_var)
        } else {
            1.0 / d
        }
    }
}
