//! Raster, legend, sample and label-map types, plus the stratified split.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{ClassId, Error, Result};

/// Band-sequential multiband raster with `f32` radiances.
///
/// `data[band * width * height + row * width + col]`
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandImage {
    width: usize,
    height: usize,
    bands: usize,
    data: Vec<f32>,
}

impl MultibandImage {
    pub fn new(width: usize, height: usize, bands: usize, data: Vec<f32>) -> Result<Self> {
        if bands == 0 || width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        let expected = width * height * bands;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            width,
            height,
            bands,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn band(&self, b: usize) -> &[f32] {
        let n = self.n_pixels();
        &self.data[b * n..(b + 1) * n]
    }

    /// Writes the spectrum of `pixel` (row-major index) into `out`.
    pub fn pixel_into(&self, pixel: usize, out: &mut [f64]) {
        let n = self.n_pixels();
        for (b, v) in out.iter_mut().enumerate().take(self.bands) {
            *v = f64::from(self.data[b * n + pixel]);
        }
    }

    pub fn pixel(&self, pixel: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.bands];
        self.pixel_into(pixel, &mut out);
        out
    }
}

/// Class names with ids assigned by lexicographic name order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassLegend {
    names: Vec<String>,
}

impl ClassLegend {
    /// Builds the canonical legend from any collection of names
    /// (duplicates collapse, order is irrelevant).
    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: BTreeSet<String> = names.into_iter().map(|s| s.as_ref().to_string()).collect();
        Self::new(set.into_iter().collect())
    }

    /// Accepts names already in canonical order; rejects anything else.
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidArgument("legend has no classes".into()));
        }
        if names.len() > usize::from(ClassId::MAX) {
            return Err(Error::InvalidArgument(format!(
                "legend has {} classes, at most {} supported",
                names.len(),
                ClassId::MAX
            )));
        }
        if let Some(empty) = names.iter().position(|n| n.is_empty()) {
            return Err(Error::InvalidArgument(format!("class {empty} has an empty name")));
        }
        for pair in names.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidArgument(format!(
                    "legend names must be unique and sorted: {:?} before {:?}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.names.get(usize::from(id)).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| i as ClassId)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &str)> {
        self.names.iter().enumerate().map(|(i, n)| (i as ClassId, n.as_str()))
    }
}

/// Labelled feature vectors, stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    n_bands: usize,
    features: Vec<f64>,
    labels: Vec<ClassId>,
}

impl SampleSet {
    pub fn new(n_bands: usize) -> Self {
        Self {
            n_bands,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_parts(n_bands: usize, features: Vec<f64>, labels: Vec<ClassId>) -> Result<Self> {
        if n_bands == 0 {
            return Err(Error::InvalidArgument("sample set needs at least one band".into()));
        }
        if features.len() != labels.len() * n_bands {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * n_bands,
                actual: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            n_bands,
            features,
            labels,
        })
    }

    pub fn push(&mut self, features: &[f64], label: ClassId) -> Result<()> {
        if features.len() != self.n_bands {
            return Err(Error::DimensionMismatch {
                expected: self.n_bands,
                actual: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(self.features.len() + pos));
        }
        self.features.extend_from_slice(features);
        self.labels.push(label);
        Ok(())
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_bands..(i + 1) * self.n_bands]
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.labels[i]
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], ClassId)> + '_ {
        self.features
            .chunks_exact(self.n_bands)
            .zip(self.labels.iter().copied())
    }

    /// Per-class sample counts for `n_classes` classes.
    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut counts = alloc::vec![0usize; n_classes];
        for &l in &self.labels {
            if let Some(c) = counts.get_mut(usize::from(l)) {
                *c += 1;
            }
        }
        counts
    }

    /// Checks every label against `legend`.
    pub fn validate_labels(&self, legend: &ClassLegend) -> Result<()> {
        match self.labels.iter().find(|&&l| usize::from(l) >= legend.len()) {
            Some(&label) => Err(Error::LabelOutOfRange {
                label,
                n_classes: legend.len(),
            }),
            None => Ok(()),
        }
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut out = Self::new(self.n_bands);
        out.features.reserve(indices.len() * self.n_bands);
        for &i in indices {
            out.features.extend_from_slice(self.features(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// Keeps only the band columns in `bands` (0-based, in order).
    pub fn project(&self, bands: &[usize]) -> Result<Self> {
        if let Some(&bad) = bands.iter().find(|&&b| b >= self.n_bands) {
            return Err(Error::BandOutOfRange {
                index: bad,
                n_bands: self.n_bands,
            });
        }
        if bands.is_empty() {
            return Err(Error::InvalidArgument("projection onto zero bands".into()));
        }
        let mut features = Vec::with_capacity(self.len() * bands.len());
        for row in self.features.chunks_exact(self.n_bands) {
            features.extend(bands.iter().map(|&b| row[b]));
        }
        Ok(Self {
            n_bands: bands.len(),
            features,
            labels: self.labels.clone(),
        })
    }
}

/// Per-pixel class labels over an image grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMap {
    width: usize,
    height: usize,
    labels: Vec<ClassId>,
    legend: ClassLegend,
}

impl ClassificationMap {
    pub fn new(width: usize, height: usize, labels: Vec<ClassId>, legend: ClassLegend) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| usize::from(l) >= legend.len()) {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: legend.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
            legend,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn legend(&self) -> &ClassLegend {
        &self.legend
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height && self.legend == other.legend
    }
}

/// Train-set size for a class of `n` samples: `round(fraction * n)`
/// clamped so both sides keep at least one sample.
pub fn train_count(n: usize, fraction: f64) -> usize {
    let raw = libm::round(fraction * n as f64) as usize;
    raw.clamp(1, n - 1)
}

/// Stratified random split; deterministic in `seed`.
///
/// Classes are visited in id order and each one's indices are shuffled with
/// a single ChaCha8 stream. Both outputs keep the original sample order.
pub fn split_samples(samples: &SampleSet, train_fraction: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
    let (train_idx, test_idx) = split_indices(samples, train_fraction, seed)?;
    Ok((samples.select(&train_idx), samples.select(&test_idx)))
}

/// The sample indices [`split_samples`] assigns to each side, ascending.
pub fn split_indices(samples: &SampleSet, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n_classes = samples
        .labels
        .iter()
        .map(|&l| usize::from(l) + 1)
        .max()
        .unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); n_classes];
    for (i, &l) in samples.labels.iter().enumerate() {
        by_class[usize::from(l)].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class_id, mut members) in by_class.into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::TooFewSamples {
                class_id: class_id as ClassId,
                count: members.len(),
                required: 2,
            });
        }
        members.shuffle(&mut rng);
        let n_train = train_count(members.len(), train_fraction);
        train_idx.extend_from_slice(&members[..n_train]);
        test_idx.extend_from_slice(&members[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((train_idx, test_idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_class_set(per_class: usize) -> SampleSet {
        let mut s = SampleSet::new(2);
        for i in 0..per_class {
            s.push(&[i as f64, 0.0], 0).unwrap();
            s.push(&[i as f64, 1.0], 1).unwrap();
        }
        s
    }

    #[test]
    fn legend_is_lexicographic() {
        let legend = ClassLegend::from_names(["water", "urban", "water"]).unwrap();
        assert_eq!(legend.names(), &["urban".to_string(), "water".to_string()]);
        assert_eq!(legend.id_of("water"), Some(1));
        assert_eq!(legend.name(0), Some("urban"));
        assert!(ClassLegend::new(vec!["b".into(), "a".into()]).is_err());
        assert!(ClassLegend::from_names([""]).is_err());
    }

    #[test]
    fn image_checks_length_and_finiteness() {
        let img = MultibandImage::new(2, 2, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(img.data()[0], 0.0);
        assert_eq!(img.data()[3], 3.0);
        assert!(matches!(
            MultibandImage::new(2, 2, 2, vec![0.0; 4]),
            Err(Error::DimensionMismatch { expected: 8, actual: 4 })
        ));
        assert!(matches!(
            MultibandImage::new(1, 1, 1, vec![f32::NAN]),
            Err(Error::NonFinite(0))
        ));
    }

    #[test]
    fn pixel_gathers_across_bands() {
        let img = MultibandImage::new(2, 1, 3, vec![1.0, 2.0, 10.0, 20.0, 100.0, 200.0]).unwrap();
        assert_eq!(img.pixel(1), vec![2.0, 20.0, 200.0]);
    }

    #[test]
    fn map_rejects_label_outside_legend() {
        let legend = ClassLegend::from_names(["a", "b"]).unwrap();
        assert!(ClassificationMap::new(1, 1, vec![1], legend.clone()).is_ok());
        assert!(matches!(
            ClassificationMap::new(1, 1, vec![3], legend),
            Err(Error::LabelOutOfRange { label: 3, n_classes: 2 })
        ));
    }

    #[test]
    fn split_counts_follow_rounding_rule() {
        let s = two_class_set(50);
        let (train, test) = split_samples(&s, 0.7, 9).unwrap();
        assert_eq!(train.class_counts(2), vec![35, 35]);
        assert_eq!(test.class_counts(2), vec![15, 15]);
    }

    #[test]
    fn split_clamps_to_keep_both_sides() {
        assert_eq!(train_count(2, 0.99), 1);
        assert_eq!(train_count(2, 0.01), 1);
        assert_eq!(train_count(10, 0.25), 3);
        assert_eq!(train_count(10, 0.05), 1);
    }

    #[test]
    fn split_is_deterministic_and_seed_dependent() {
        let s = two_class_set(50);
        let a = split_samples(&s, 0.5, 1).unwrap();
        let b = split_samples(&s, 0.5, 1).unwrap();
        let c = split_samples(&s, 0.5, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
        assert_eq!(a.0.class_counts(2), c.0.class_counts(2));
    }

    #[test]
    fn split_partitions_input() {
        let s = two_class_set(13);
        let (train, test) = split_samples(&s, 0.6, 4).unwrap();
        let mut all: Vec<(i64, i64, ClassId)> = train
            .iter()
            .chain(test.iter())
            .map(|(f, l)| (f[0] as i64, f[1] as i64, l))
            .collect();
        all.sort_unstable();
        let mut want: Vec<(i64, i64, ClassId)> = s.iter().map(|(f, l)| (f[0] as i64, f[1] as i64, l)).collect();
        want.sort_unstable();
        assert_eq!(all, want);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let mut s = two_class_set(3);
        s.push(&[0.0, 0.0], 2).unwrap();
        assert!(matches!(
            split_samples(&s, 0.5, 0),
            Err(Error::TooFewSamples { class_id: 2, count: 1, .. })
        ));
        assert!(split_samples(&two_class_set(3), 1.0, 0).is_err());
    }

    #[test]
    fn project_selects_columns() {
        let mut s = SampleSet::new(3);
        s.push(&[1.0, 2.0, 3.0], 0).unwrap();
        let p = s.project(&[2, 0]).unwrap();
        assert_eq!(p.features(0), &[3.0, 1.0]);
        assert!(matches!(s.project(&[3]), Err(Error::BandOutOfRange { index: 3, n_bands: 3 })));
    }
}
