//! Accuracy assessment and ensemble diversity.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::ClassificationMap;
use crate::{ClassId, Error, Result};

/// Two-sided 5% critical value for the binomial Z-test.
pub const Z_CRITICAL: f64 = 1.96;

/// Rows are reference classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_counts(k: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                actual: counts.len(),
            });
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidArgument("confusion matrix has no entries".into()));
        }
        Ok(Self { k, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, reference: usize, predicted: usize) -> u64 {
        self.counts[reference * self.k + predicted]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.chunks_exact(self.k).map(|r| r.iter().sum()).collect()
    }

    pub fn column_totals(&self) -> Vec<u64> {
        (0..self.k).map(|j| (0..self.k).map(|i| self.get(i, j)).sum()).collect()
    }
}

pub fn confusion_matrix(predicted: &[ClassId], reference: &[ClassId], k: usize) -> Result<ConfusionMatrix> {
    if predicted.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("confusion matrix over zero samples".into()));
    }
    let mut counts = vec![0u64; k * k];
    for (&p, &r) in predicted.iter().zip(reference) {
        for label in [p, r] {
            if usize::from(label) >= k {
                return Err(Error::LabelOutOfRange { label, n_classes: k });
            }
        }
        counts[usize::from(r) * k + usize::from(p)] += 1;
    }
    Ok(ConfusionMatrix { k, counts })
}

pub fn overall_accuracy(c: &ConfusionMatrix) -> f64 {
    c.trace() as f64 / c.total() as f64
}

/// Cohen's kappa. With degenerate marginals (`p_e = 1`) returns 1 for
/// perfect agreement and 0 otherwise.
pub fn kappa(c: &ConfusionMatrix) -> f64 {
    let n = c.total() as f64;
    let observed = c.trace() as f64 / n;
    let expected: f64 = c
        .row_totals()
        .iter()
        .zip(c.column_totals())
        .map(|(&r, col)| r as f64 * col as f64)
        .sum::<f64>()
        / (n * n);
    if expected >= 1.0 {
        return if observed >= 1.0 { 1.0 } else { 0.0 };
    }
    (observed - expected) / (1.0 - expected)
}

/// Kappa of the cross-tabulation of two label sequences.
pub fn label_kappa(a: &[ClassId], b: &[ClassId], k: usize) -> Result<f64> {
    Ok(kappa(&confusion_matrix(b, a, k)?))
}

/// Agreement between two maps over every pixel.
pub fn pairwise_kappa(a: &ClassificationMap, b: &ClassificationMap) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::Mismatch("pairwise kappa over different grids".into()));
    }
    label_kappa(a.labels(), b.labels(), a.legend().len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversitySummary {
    /// Kappas for pairs `(0,1), (0,2), ..., (m-2,m-1)`.
    pub pairwise_kappas: Vec<f64>,
    pub mean: f64,
    /// Population variance (denominator = number of pairs).
    pub variance: f64,
}

impl DiversitySummary {
    pub fn from_kappas(pairwise_kappas: Vec<f64>) -> Result<Self> {
        if pairwise_kappas.is_empty() {
            return Err(Error::InvalidArgument("diversity needs at least one pair".into()));
        }
        let n = pairwise_kappas.len() as f64;
        let mean = pairwise_kappas.iter().sum::<f64>() / n;
        let variance = pairwise_kappas.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / n;
        Ok(Self {
            pairwise_kappas,
            mean,
            variance,
        })
    }
}

/// Mean and variance of pairwise kappa over label sequences
/// (maps, or predictions on a sample set).
pub fn label_diversity(voters: &[&[ClassId]], k: usize) -> Result<DiversitySummary> {
    if voters.len() < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "diversity needs at least 2 classifiers, got {}",
            voters.len()
        )));
    }
    let mut kappas = Vec::with_capacity(voters.len() * (voters.len() - 1) / 2);
    for i in 0..voters.len() {
        for j in (i + 1)..voters.len() {
            kappas.push(label_kappa(voters[i], voters[j], k)?);
        }
    }
    DiversitySummary::from_kappas(kappas)
}

pub fn diversity_summary(base_maps: &[ClassificationMap]) -> Result<DiversitySummary> {
    if let Some(first) = base_maps.first() {
        if base_maps.iter().any(|m| !m.same_grid(first)) {
            return Err(Error::Mismatch("diversity over different grids".into()));
        }
    }
    let voters: Vec<&[ClassId]> = base_maps.iter().map(ClassificationMap::labels).collect();
    let k = base_maps.first().map(|m| m.legend().len()).unwrap_or(0);
    label_diversity(&voters, k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZTestResult {
    pub z: f64,
    pub significant: bool,
}

impl ZTestResult {
    pub fn new(z: f64) -> Self {
        Self {
            z,
            significant: z.abs() > Z_CRITICAL,
        }
    }
}

/// Difference of two proportions:
/// `Z = (p1 - p2) / sqrt(p1(1-p1)/n1 + p2(1-p2)/n2)`.
///
/// A zero denominator gives `Z = 0` for equal proportions and a signed
/// infinity otherwise.
pub fn z_test(p1: f64, n1: u64, p2: f64, n2: u64) -> Result<ZTestResult> {
    let in_unit = |p: f64| (0.0..=1.0).contains(&p);
    if n1 == 0 || n2 == 0 || !in_unit(p1) || !in_unit(p2) {
        return Err(Error::InvalidArgument(alloc::format!(
            "z-test needs proportions in [0,1] and positive counts, got ({p1}, {n1}), ({p2}, {n2})"
        )));
    }
    let var = p1 * (1.0 - p1) / n1 as f64 + p2 * (1.0 - p2) / n2 as f64;
    let diff = p1 - p2;
    let z = if var > 0.0 {
        diff / libm::sqrt(var)
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    Ok(ZTestResult::new(z))
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument("correlation of a constant series".into()));
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ClassLegend;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(rows.len(), rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let perfect = confusion_matrix(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(perfect.counts(), &[1, 0, 0, 0, 2, 0, 0, 0, 1]);

        let reference = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        let c = confusion_matrix(&[0; 10], &reference, 2).unwrap();
        assert_eq!(c.counts(), &[5, 0, 5, 0]);

        assert!(confusion_matrix(&[0], &[0, 1], 2).is_err());
        assert!(confusion_matrix(&[2], &[0], 2).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert!((overall_accuracy(&cm(&[&[45, 5], &[5, 45]])) - 0.9).abs() < 1e-15);
        assert_eq!(overall_accuracy(&cm(&[&[3, 0], &[0, 4]])), 1.0);
        assert_eq!(overall_accuracy(&cm(&[&[0, 3], &[4, 0]])), 0.0);
    }

    #[test]
    fn kappa_examples() {
        assert!((kappa(&cm(&[&[45, 5], &[5, 45]])) - 0.8).abs() < 1e-12);
        assert!((kappa(&cm(&[&[30, 10], &[20, 40]])) - 0.4).abs() < 1e-12);
        assert_eq!(kappa(&cm(&[&[7, 0, 0], &[0, 2, 0], &[0, 0, 1]])), 1.0);
    }

    #[test]
    fn kappa_degenerate_marginals() {
        // one class only: p_e = 1
        assert_eq!(kappa(&cm(&[&[10, 0], &[0, 0]])), 1.0);
    }

    #[test]
    fn pairwise_kappa_is_symmetric() {
        let legend = ClassLegend::from_names(["a", "b", "c"]).unwrap();
        let a = ClassificationMap::new(5, 2, vec![0, 0, 1, 1, 2, 2, 0, 1, 2, 0], legend.clone()).unwrap();
        let b = ClassificationMap::new(5, 2, vec![0, 1, 1, 1, 2, 0, 0, 1, 2, 2], legend.clone()).unwrap();
        assert_eq!(pairwise_kappa(&a, &b).unwrap(), pairwise_kappa(&b, &a).unwrap());
        assert_eq!(pairwise_kappa(&a, &a).unwrap(), 1.0);
        let other = ClassificationMap::new(10, 1, vec![0; 10], legend).unwrap();
        assert!(pairwise_kappa(&a, &other).is_err());
    }

    #[test]
    fn diversity_of_identical_maps() {
        let legend = ClassLegend::from_names(["a", "b"]).unwrap();
        let m = ClassificationMap::new(2, 2, vec![0, 1, 1, 0], legend).unwrap();
        let d = diversity_summary(&vec![m; 5]).unwrap();
        assert_eq!(d.pairwise_kappas.len(), 10);
        assert_eq!(d.mean, 1.0);
        assert_eq!(d.variance, 0.0);
        assert!(diversity_summary(&[]).is_err());
    }

    #[test]
    fn z_test_examples() {
        let same = z_test(0.9, 100, 0.9, 50).unwrap();
        assert_eq!(same.z, 0.0);
        assert!(!same.significant);

        let r = z_test(0.93, 1000, 0.89, 1000).unwrap();
        assert!((r.z - 3.133).abs() < 0.005);
        assert!(r.significant);

        let perfect = z_test(1.0, 10, 1.0, 10).unwrap();
        assert_eq!(perfect.z, 0.0);
        let split = z_test(1.0, 10, 0.0, 10).unwrap();
        assert_eq!(split.z, f64::INFINITY);
        assert!(split.significant);
        assert_eq!(z_test(0.0, 10, 1.0, 10).unwrap().z, f64::NEG_INFINITY);

        assert!(z_test(1.2, 10, 0.5, 10).is_err());
        assert!(z_test(0.5, 0, 0.5, 10).is_err());
    }

    #[test]
    fn pearson_examples() {
        let x = [0.0, 1.0, 2.0];
        assert!((pearson_correlation(&x, &[0.0, 1.0, 2.0]).unwrap() - 1.0).abs() < 1e-10);
        assert!((pearson_correlation(&x, &[2.0, 1.0, 0.0]).unwrap() + 1.0).abs() < 1e-10);
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap() - 0.5).abs() < 1e-10);
        assert!(pearson_correlation(&x, &[1.0, 1.0, 1.0]).is_err());
        assert!(pearson_correlation(&[1.0], &[1.0]).is_err());
    }
}
