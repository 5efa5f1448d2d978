//! Maximum-likelihood Gaussian classifier with equal priors.

use alloc::vec::Vec;

use crate::dataset::{ClassLegend, SampleSet};
use crate::linalg::Cholesky;
use crate::stats::{estimate_class_statistics, BandSubset, ClassStatistics};
use crate::{ClassId, Error, Result};

#[derive(Debug, Clone)]
struct ClassModel {
    mean: Vec<f64>,
    chol: Cholesky,
    log_det: f64,
}

#[derive(Debug, Clone)]
pub struct GaussianMlClassifier {
    n_bands: usize,
    subset: BandSubset,
    classes: Vec<ClassModel>,
}

impl GaussianMlClassifier {
    pub fn train(train: &SampleSet, legend: &ClassLegend, subset: &BandSubset) -> Result<Self> {
        let projected = train.project(subset.indices())?;
        let stats = estimate_class_statistics(&projected, legend)?;
        let mut out = Self::from_statistics(stats.classes())?;
        out.n_bands = train.n_bands();
        out.subset = subset.clone();
        Ok(out)
    }

    /// Builds the classifier directly from class statistics over all of
    /// their bands.
    pub fn from_statistics(classes: &[ClassStatistics]) -> Result<Self> {
        let d = classes.first().map(ClassStatistics::dim).unwrap_or(0);
        let models = classes
            .iter()
            .map(|c| {
                let reg = c.regularized()?;
                let chol = Cholesky::factor(&reg.covariance)?;
                Ok(ClassModel {
                    mean: reg.mean,
                    log_det: chol.log_det(),
                    chol,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_bands: d,
            subset: BandSubset::full(d.max(1)),
            classes: models,
        })
    }

    /// `-1/2 (Mahalanobis² + ln det Σ)` for each class, constants dropped.
    pub fn log_likelihoods_subset(&self, x: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| {
                let diff: Vec<f64> = x.iter().zip(&c.mean).map(|(a, b)| a - b).collect();
                -0.5 * (c.chol.quad_form_inv(&diff) + c.log_det)
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        if x.len() != self.n_bands {
            return Err(Error::DimensionMismatch {
                expected: self.n_bands,
                actual: x.len(),
            });
        }
        let sub: Vec<f64> = self.subset.indices().iter().map(|&b| x[b]).collect();
        let ll = self.log_likelihoods_subset(&sub);
        let mut best = 0usize;
        for (i, v) in ll.iter().enumerate() {
            if *v > ll[best] {
                best = i;
            }
        }
        Ok(best as ClassId)
    }

    pub fn predict_set(&self, set: &SampleSet) -> Result<Vec<ClassId>> {
        set.iter().map(|(x, _)| self.predict(x)).collect()
    }
}
