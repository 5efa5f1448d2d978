//! Gaussian class-separability indices.
//!
//! For classes `a`, `b` with means `m` and covariances `S`:
//!
//! ```text
//! B  = 1/8 Δᵀ [(Sa+Sb)/2]⁻¹ Δ + 1/2 ln( det((Sa+Sb)/2) / sqrt(det Sa · det Sb) )
//! D  = 1/2 tr[(Sa−Sb)(Sb⁻¹−Sa⁻¹)] + 1/2 tr[(Sa⁻¹+Sb⁻¹) Δ Δᵀ]
//! TD = scale · (1 − exp(−D/8))
//! ```
//!
//! with `Δ = ma − mb`. Determinants and inverses go through Cholesky
//! factors; log-determinants are `2 Σ ln L_ii`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::linalg::{Cholesky, Matrix};
use crate::stats::{project_to_subset, BandSubset, ClassStatistics, StatisticsSet};
use crate::{Error, Result};

/// Default saturation value of transformed divergence.
pub const TD_SCALE: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeparabilityIndex {
    Bhattacharyya,
    Divergence,
    TransformedDivergence,
}

impl SeparabilityIndex {
    pub const ALL: [Self; 3] = [Self::Bhattacharyya, Self::Divergence, Self::TransformedDivergence];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bhattacharyya => "bhattacharyya",
            Self::Divergence => "divergence",
            Self::TransformedDivergence => "transformed_divergence",
        }
    }

    /// Single-letter family prefix used for ensemble ids.
    pub fn prefix(self) -> char {
        match self {
            Self::Bhattacharyya => 'B',
            Self::Divergence => 'D',
            Self::TransformedDivergence => 'T',
        }
    }
}

impl fmt::Display for SeparabilityIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SeparabilityIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bhattacharyya" | "b" => Ok(Self::Bhattacharyya),
            "divergence" | "d" => Ok(Self::Divergence),
            "transformed_divergence" | "transformed-divergence" | "td" | "t" => Ok(Self::TransformedDivergence),
            other => Err(Error::InvalidArgument(alloc::format!("unknown separability index {other:?}"))),
        }
    }
}

/// How pairwise values combine into one multiclass score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" | "average" => Ok(Self::Mean),
            "min" | "minimum" => Ok(Self::Min),
            other => Err(Error::InvalidArgument(alloc::format!("unknown aggregation {other:?}"))),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mean => "mean",
            Self::Min => "min",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityOptions {
    pub aggregation: Aggregation,
    pub td_scale: f64,
}

impl Default for SeparabilityOptions {
    fn default() -> Self {
        Self {
            aggregation: Aggregation::Mean,
            td_scale: TD_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityScore {
    pub index: SeparabilityIndex,
    pub value: f64,
}

fn check_pair(a: &ClassStatistics, b: &ClassStatistics) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

fn mean_difference(a: &ClassStatistics, b: &ClassStatistics) -> Vec<f64> {
    a.mean.iter().zip(&b.mean).map(|(x, y)| x - y).collect()
}

/// Bhattacharyya distance between two Gaussian classes.
pub fn bhattacharyya(a: &ClassStatistics, b: &ClassStatistics) -> Result<f64> {
    check_pair(a, b)?;
    let delta = mean_difference(a, b);
    let pooled = a.covariance.add(&b.covariance).scale(0.5);
    let pooled = Cholesky::factor(&pooled)?;
    let chol_a = Cholesky::factor(&a.covariance)?;
    let chol_b = Cholesky::factor(&b.covariance)?;
    let mahalanobis = pooled.quad_form_inv(&delta) / 8.0;
    let log_term = 0.5 * (pooled.log_det() - 0.5 * (chol_a.log_det() + chol_b.log_det()));
    // the log term is >= 0 analytically; clip round-off
    Ok((mahalanobis + log_term).max(0.0))
}

/// Symmetrised (Kullback-Leibler) divergence between two Gaussian classes.
pub fn divergence(a: &ClassStatistics, b: &ClassStatistics) -> Result<f64> {
    check_pair(a, b)?;
    let inv_a = Cholesky::factor(&a.covariance)?.inverse();
    let inv_b = Cholesky::factor(&b.covariance)?.inverse();
    let delta = mean_difference(a, b);
    let d = a.dim();

    let cov_diff = a.covariance.sub(&b.covariance);
    let inv_diff = inv_b.sub(&inv_a);
    let mut shape_term = 0.0;
    let mut mean_term = 0.0;
    for i in 0..d {
        for j in 0..d {
            // tr(XY) = Σ_ij X_ij Y_ji
            shape_term += cov_diff[(i, j)] * inv_diff[(j, i)];
            mean_term += (inv_a[(i, j)] + inv_b[(i, j)]) * delta[j] * delta[i];
        }
    }
    Ok((0.5 * shape_term + 0.5 * mean_term).max(0.0))
}

/// Saturating transform of a divergence value.
pub fn transformed_from_divergence(divergence: f64, scale: f64) -> f64 {
    scale * (1.0 - libm::exp(-divergence / 8.0))
}

pub fn transformed_divergence(a: &ClassStatistics, b: &ClassStatistics) -> Result<f64> {
    transformed_divergence_scaled(a, b, TD_SCALE)
}

pub fn transformed_divergence_scaled(a: &ClassStatistics, b: &ClassStatistics, scale: f64) -> Result<f64> {
    Ok(transformed_from_divergence(divergence(a, b)?, scale))
}

pub fn pairwise(index: SeparabilityIndex, a: &ClassStatistics, b: &ClassStatistics, td_scale: f64) -> Result<f64> {
    match index {
        SeparabilityIndex::Bhattacharyya => bhattacharyya(a, b),
        SeparabilityIndex::Divergence => divergence(a, b),
        SeparabilityIndex::TransformedDivergence => transformed_divergence_scaled(a, b, td_scale),
    }
}

/// Scores `subset` by aggregating the pairwise index over all class pairs.
///
/// Projected class covariances are regularised before use.
pub fn multiclass_separability(
    stats: &StatisticsSet,
    subset: &BandSubset,
    index: SeparabilityIndex,
    options: &SeparabilityOptions,
) -> Result<SeparabilityScore> {
    let k = stats.n_classes();
    if k < 2 {
        return Err(Error::InvalidArgument(alloc::format!(
            "separability needs at least 2 classes, got {k}"
        )));
    }
    let projected = project_to_subset(stats, subset)?;
    let classes = projected
        .classes()
        .iter()
        .map(ClassStatistics::regularized)
        .collect::<Result<Vec<_>>>()?;

    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut pairs = 0usize;
    for i in 0..k {
        for j in (i + 1)..k {
            let v = pairwise(index, &classes[i], &classes[j], options.td_scale)?;
            sum += v;
            min = min.min(v);
            pairs += 1;
        }
    }
    let value = match options.aggregation {
        Aggregation::Mean => sum / pairs as f64,
        Aggregation::Min => min,
    };
    Ok(SeparabilityScore { index, value })
}

/// Covariance of a linear image of the class: `A S Aᵀ`, mean `A m`.
pub fn transform_statistics(stats: &ClassStatistics, map: &Matrix) -> ClassStatistics {
    ClassStatistics {
        class_id: stats.class_id,
        count: stats.count,
        mean: map.mul_vec(&stats.mean),
        covariance: map.matmul(&stats.covariance).matmul(&map.transpose()),
    }
}
