//! Per-class Gaussian statistics: estimation, band projection and
//! covariance regularisation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dataset::{ClassLegend, SampleSet};
use crate::linalg::{Cholesky, Matrix};
use crate::{ClassId, Error, Result};

/// Strictly increasing 0-based band indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BandSubset(Vec<usize>);

impl BandSubset {
    pub fn new(bands: Vec<usize>, n_bands: usize) -> Result<Self> {
        if bands.is_empty() || bands.len() > n_bands {
            return Err(Error::InvalidArgument(format!(
                "subset size {} not in 1..={n_bands}",
                bands.len()
            )));
        }
        if let Some(&bad) = bands.iter().find(|&&b| b >= n_bands) {
            return Err(Error::BandOutOfRange { index: bad, n_bands });
        }
        if bands.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "band indices must be strictly increasing: {bands:?}"
            )));
        }
        Ok(Self(bands))
    }

    pub fn full(n_bands: usize) -> Self {
        Self((0..n_bands).collect())
    }

    /// Parses 1-based band numbers as written in files (`"1|3|5"` style,
    /// with any of `|`, `,` or whitespace as separator).
    pub fn parse_one_based(text: &str, n_bands: usize) -> Result<Self> {
        let mut bands = Vec::new();
        for tok in text
            .split(|c: char| c == '|' || c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let b: usize = tok
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad band number {tok:?}")))?;
            if b == 0 {
                return Err(Error::InvalidArgument("band numbers are 1-based".into()));
            }
            bands.push(b - 1);
        }
        Self::new(bands, n_bands)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based numbers joined by `sep`.
    pub fn one_based(&self, sep: &str) -> String {
        let mut out = String::new();
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                out.push_str(sep);
            }
            out.push_str(&format!("{}", b + 1));
        }
        out
    }
}

impl fmt::Display for BandSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.one_based("|"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassStatistics {
    pub class_id: ClassId,
    pub count: usize,
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

impl ClassStatistics {
    pub fn new(class_id: ClassId, count: usize, mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        if covariance.dim() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                actual: covariance.dim(),
            });
        }
        if !covariance.is_symmetric(1e-12) {
            return Err(Error::InvalidArgument(format!(
                "covariance of class {class_id} is not symmetric"
            )));
        }
        Ok(Self {
            class_id,
            count,
            mean,
            covariance,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn project(&self, subset: &BandSubset) -> Self {
        Self {
            class_id: self.class_id,
            count: self.count,
            mean: subset.indices().iter().map(|&b| self.mean[b]).collect(),
            covariance: self.covariance.select(subset.indices()),
        }
    }

    pub fn regularized(&self) -> Result<Self> {
        Ok(Self {
            covariance: regularize_covariance(&self.covariance)?,
            ..self.clone()
        })
    }
}

/// Statistics for every legend class over a common band set.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsSet {
    n_bands: usize,
    classes: Vec<ClassStatistics>,
}

impl StatisticsSet {
    pub fn new(classes: Vec<ClassStatistics>) -> Result<Self> {
        let n_bands = classes.first().map(ClassStatistics::dim).unwrap_or(0);
        for (i, c) in classes.iter().enumerate() {
            if c.dim() != n_bands {
                return Err(Error::DimensionMismatch {
                    expected: n_bands,
                    actual: c.dim(),
                });
            }
            if usize::from(c.class_id) != i {
                return Err(Error::InvalidArgument(format!(
                    "statistics out of class order at position {i}"
                )));
            }
        }
        Ok(Self { n_bands, classes })
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassStatistics] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> &ClassStatistics {
        &self.classes[usize::from(id)]
    }
}

/// Sample mean and `(n - 1)` covariance per legend class.
pub fn estimate_class_statistics(train: &SampleSet, legend: &ClassLegend) -> Result<StatisticsSet> {
    train.validate_labels(legend)?;
    let d = train.n_bands();
    let k = legend.len();
    // Welford accumulators
    let mut counts = alloc::vec![0usize; k];
    let mut means = alloc::vec![alloc::vec![0.0f64; d]; k];
    let mut comoments: Vec<Matrix> = (0..k).map(|_| Matrix::zeros(d)).collect();
    let mut delta = alloc::vec![0.0f64; d];

    for (x, label) in train.iter() {
        let c = usize::from(label);
        counts[c] += 1;
        let n = counts[c] as f64;
        let mean = &mut means[c];
        for j in 0..d {
            delta[j] = x[j] - mean[j];
            mean[j] += delta[j] / n;
        }
        let m2 = &mut comoments[c];
        for i in 0..d {
            let after_i = x[i] - mean[i];
            for j in 0..=i {
                m2[(i, j)] += delta[j] * after_i;
            }
        }
    }

    let mut classes = Vec::with_capacity(k);
    for (c, ((count, mean), mut m2)) in counts.into_iter().zip(means).zip(comoments).enumerate() {
        if count < 2 {
            return Err(Error::TooFewSamples {
                class_id: c as ClassId,
                count,
                required: 2,
            });
        }
        let denom = (count - 1) as f64;
        for i in 0..d {
            for j in 0..=i {
                let v = m2[(i, j)] / denom;
                m2[(i, j)] = v;
                m2[(j, i)] = v;
            }
        }
        classes.push(ClassStatistics::new(c as ClassId, count, mean, m2)?);
    }
    StatisticsSet::new(classes)
}

/// Marginal statistics over the bands in `subset`.
pub fn project_to_subset(stats: &StatisticsSet, subset: &BandSubset) -> Result<StatisticsSet> {
    if let Some(&bad) = subset.indices().iter().find(|&&b| b >= stats.n_bands) {
        return Err(Error::BandOutOfRange {
            index: bad,
            n_bands: stats.n_bands,
        });
    }
    Ok(StatisticsSet {
        n_bands: subset.len(),
        classes: stats.classes.iter().map(|c| c.project(subset)).collect(),
    })
}

const RIDGE_RETRIES: usize = 4;

/// Returns `cov` untouched when it already factors; otherwise adds a ridge
/// of `1e-6 * trace / d` (or `1e-6` for zero trace), growing it tenfold up
/// to four more times.
pub fn regularize_covariance(cov: &Matrix) -> Result<Matrix> {
    if Cholesky::factor(cov).is_ok() {
        return Ok(cov.clone());
    }
    let d = cov.dim().max(1) as f64;
    let trace = cov.trace();
    let mut ridge = if trace > 0.0 { 1e-6 * trace / d } else { 1e-6 };
    for _ in 0..=RIDGE_RETRIES {
        let candidate = cov.add_diagonal(ridge);
        if Cholesky::factor(&candidate).is_ok() {
            return Ok(candidate);
        }
        ridge *= 10.0;
    }
    Err(Error::NotPositiveDefinite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn legend(n: usize) -> ClassLegend {
        ClassLegend::from_names((0..n).map(|i| format!("c{i}"))).unwrap()
    }

    #[test]
    fn two_point_covariance() {
        let mut s = SampleSet::new(2);
        s.push(&[0.0, 0.0], 0).unwrap();
        s.push(&[2.0, 2.0], 0).unwrap();
        let st = estimate_class_statistics(&s, &legend(1)).unwrap();
        let c = st.class(0);
        assert_eq!(c.mean, vec![1.0, 1.0]);
        assert_eq!(c.covariance, Matrix::from_rows(&[&[2.0, 2.0], &[2.0, 2.0]]).unwrap());
    }

    #[test]
    fn one_dimensional_variance() {
        let mut s = SampleSet::new(1);
        for v in [0.0, 1.0, 2.0] {
            s.push(&[v], 0).unwrap();
        }
        let st = estimate_class_statistics(&s, &legend(1)).unwrap();
        assert_eq!(st.class(0).mean, vec![1.0]);
        assert_eq!(st.class(0).covariance[(0, 0)], 1.0);
    }

    #[test]
    fn identical_samples_give_zero_covariance() {
        let mut s = SampleSet::new(3);
        for _ in 0..4 {
            s.push(&[1.5, -2.0, 7.0], 0).unwrap();
        }
        let st = estimate_class_statistics(&s, &legend(1)).unwrap();
        assert_eq!(st.class(0).covariance, Matrix::zeros(3));
    }

    #[test]
    fn class_with_one_sample_is_rejected() {
        let mut s = SampleSet::new(1);
        s.push(&[0.0], 0).unwrap();
        s.push(&[1.0], 0).unwrap();
        s.push(&[1.0], 1).unwrap();
        assert!(matches!(
            estimate_class_statistics(&s, &legend(2)),
            Err(Error::TooFewSamples { class_id: 1, count: 1, .. })
        ));
    }

    #[test]
    fn projection_selects_coordinates() {
        let c = ClassStatistics::new(0, 3, vec![1.0, 2.0, 3.0], Matrix::diagonal(&[1.0, 4.0, 9.0])).unwrap();
        let st = StatisticsSet::new(vec![c]).unwrap();
        let p = project_to_subset(&st, &BandSubset::new(vec![0, 2], 3).unwrap()).unwrap();
        assert_eq!(p.class(0).mean, vec![1.0, 3.0]);
        let p = project_to_subset(&st, &BandSubset::new(vec![1], 3).unwrap()).unwrap();
        assert_eq!(p.class(0).covariance, Matrix::from_rows(&[&[4.0]]).unwrap());
        assert_eq!(project_to_subset(&st, &BandSubset::full(3)).unwrap(), st);
    }

    #[test]
    fn regularisation_rules() {
        let id = Matrix::identity(3);
        assert_eq!(regularize_covariance(&id).unwrap(), id);

        let singular = Matrix::from_rows(&[&[2.0, 2.0], &[2.0, 2.0]]).unwrap();
        let r = regularize_covariance(&singular).unwrap();
        let lambda = 2e-6;
        assert_eq!(r, Matrix::from_rows(&[&[2.0 + lambda, 2.0], &[2.0, 2.0 + lambda]]).unwrap());

        let zero = Matrix::zeros(2);
        assert_eq!(regularize_covariance(&zero).unwrap(), Matrix::diagonal(&[1e-6, 1e-6]));
    }

    #[test]
    fn regularisation_gives_up_on_indefinite_input() {
        let bad = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        assert_eq!(regularize_covariance(&bad).unwrap_err(), Error::NotPositiveDefinite);
    }

    #[test]
    fn band_subset_validation_and_text() {
        assert!(BandSubset::new(vec![], 3).is_err());
        assert!(BandSubset::new(vec![1, 1], 3).is_err());
        assert!(BandSubset::new(vec![2, 1], 3).is_err());
        assert!(BandSubset::new(vec![3], 3).is_err());
        let b = BandSubset::parse_one_based("1|3|6", 6).unwrap();
        assert_eq!(b.indices(), &[0, 2, 5]);
        assert_eq!(format!("{b}"), "1|3|6");
        assert_eq!(b.one_based(","), "1,3,6");
        assert!(BandSubset::parse_one_based("0|1", 6).is_err());
    }
}
