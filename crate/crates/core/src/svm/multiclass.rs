//! One-vs-one multiclass SVM with max-wins voting.

use alloc::vec;
use alloc::vec::Vec;

use super::smo::{train_binary_svm, TrainedBinarySvm};
use super::{FeatureScaler, SvmParams};
use crate::dataset::{ClassLegend, SampleSet};
use crate::stats::BandSubset;
use crate::{ClassId, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassSvm {
    /// Band count of the vectors [`MulticlassSvm::predict`] accepts.
    pub n_bands: usize,
    pub subset: BandSubset,
    pub n_classes: usize,
    pub scaler: FeatureScaler,
    /// One machine per class pair `(i, j)`, `i < j`, in lexicographic
    /// pair order; machine `(i, j)` has `i` as its positive class.
    pub machines: Vec<TrainedBinarySvm>,
}

/// Index of the largest count; ties go to the lowest index.
pub fn argmax_votes(votes: &[u32]) -> ClassId {
    let mut best = 0usize;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    best as ClassId
}

/// Projects `train` onto `subset`, standardises it and trains one RBF
/// machine per class pair.
pub fn train_multiclass(
    train: &SampleSet,
    legend: &ClassLegend,
    subset: &BandSubset,
    params: &SvmParams,
) -> Result<MulticlassSvm> {
    params.validate()?;
    train.validate_labels(legend)?;
    let k = legend.len();
    if k < 2 {
        return Err(Error::InvalidArgument("multiclass SVM needs at least 2 classes".into()));
    }
    let projected = train.project(subset.indices())?;
    let scaler = FeatureScaler::fit(&projected)?;
    let scaled = scaler.transform_set(&projected);
    let params = SvmParams {
        gamma: Some(params.gamma.unwrap_or_else(|| scaler.default_gamma())),
        ..*params
    };

    let mut by_class: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
    for (x, l) in scaled.iter() {
        by_class[usize::from(l)].push(x);
    }
    if let Some(empty) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::TooFewSamples {
            class_id: empty as ClassId,
            count: 0,
            required: 1,
        });
    }

    let mut machines = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in (i + 1)..k {
            machines.push(train_binary_svm(
                &by_class[i],
                &by_class[j],
                i as ClassId,
                j as ClassId,
                &params,
            )?);
        }
    }
    Ok(MulticlassSvm {
        n_bands: train.n_bands(),
        subset: subset.clone(),
        n_classes: k,
        scaler,
        machines,
    })
}

impl MulticlassSvm {
    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn all_converged(&self) -> bool {
        self.machines.iter().all(|m| m.converged)
    }

    /// Votes cast by every pairwise machine for an already-scaled vector.
    pub fn votes(&self, scaled: &[f64]) -> Vec<u32> {
        let mut votes = vec![0u32; self.n_classes];
        for m in &self.machines {
            let winner = if m.decision_unchecked(scaled) >= 0.0 {
                m.positive
            } else {
                m.negative
            };
            votes[usize::from(winner)] += 1;
        }
        votes
    }

    /// Classifies a vector over the subset's bands (unscaled).
    pub fn predict_subset(&self, x: &[f64]) -> Result<ClassId> {
        if x.len() != self.subset.len() {
            return Err(Error::DimensionMismatch {
                expected: self.subset.len(),
                actual: x.len(),
            });
        }
        let scaled = self.scaler.transform(x);
        Ok(argmax_votes(&self.votes(&scaled)))
    }

    /// Classifies a full-band vector (unscaled).
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        if x.len() != self.n_bands {
            return Err(Error::DimensionMismatch {
                expected: self.n_bands,
                actual: x.len(),
            });
        }
        let sub: Vec<f64> = self.subset.indices().iter().map(|&b| x[b]).collect();
        self.predict_subset(&sub)
    }

    pub fn predict_set(&self, set: &SampleSet) -> Result<Vec<ClassId>> {
        set.iter().map(|(x, _)| self.predict(x)).collect()
    }
}
