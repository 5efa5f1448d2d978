//! Binary soft-margin SVM trained by sequential minimal optimisation.
//!
//! Each step optimises two multipliers analytically. The pair is the
//! maximal violating pair: `i` minimises `F` over examples whose multiplier
//! can move "up", and `j` maximises `F` over those that can move "down",
//! where `F_i = Σ_j α_j y_j K_ij - y_i` is the bias-free prediction error.
//! That is the partner with the largest `|E_i - E_j|` among admissible
//! pairs, and the gap `F_j - F_i` is the KKT violation used as the stopping
//! rule. Ties go to the lowest sample index, so training is deterministic.

use alloc::vec;
use alloc::vec::Vec;

use super::{rbf_kernel, SvmParams};
use crate::{ClassId, Error, Result};

/// Floor on the curvature `K11 + K22 - 2 K12` (duplicate points give 0).
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedBinarySvm {
    pub dim: usize,
    /// Row-major support vectors, `coefficients.len()` rows.
    pub support_vectors: Vec<f64>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Class voted for when the decision value is positive.
    pub positive: ClassId,
    pub negative: ClassId,
    pub converged: bool,
    /// Pair updates performed.
    pub iterations: usize,
}

impl TrainedBinarySvm {
    pub fn n_support(&self) -> usize {
        self.coefficients.len()
    }

    pub fn support_vector(&self, i: usize) -> &[f64] {
        &self.support_vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// `f(x) = Σ α_i y_i K(x_i, x) + b`
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        Ok(self.decision_unchecked(x))
    }

    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .chunks_exact(self.dim)
            .zip(&self.coefficients)
            .map(|(sv, coef)| coef * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

struct Solver {
    n: usize,
    y: Vec<f64>,
    alpha: Vec<f64>,
    /// `F_i = Σ_j α_j y_j K_ij - y_i`
    f: Vec<f64>,
    gram: Vec<f64>,
    c: f64,
}

impl Solver {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.n + j]
    }

    fn can_move_up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > 0.0
        }
    }

    fn can_move_down(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] > 0.0
        } else {
            self.alpha[i] < self.c
        }
    }

    /// `(i_up, i_low, F_low - F_up)`
    fn most_violating_pair(&self) -> Option<(usize, usize, f64)> {
        let mut up: Option<usize> = None;
        let mut low: Option<usize> = None;
        for i in 0..self.n {
            if self.can_move_up(i) && up.is_none_or(|u| self.f[i] < self.f[u]) {
                up = Some(i);
            }
            if self.can_move_down(i) && low.is_none_or(|l| self.f[i] > self.f[l]) {
                low = Some(i);
            }
        }
        let (u, l) = (up?, low?);
        Some((u, l, self.f[l] - self.f[u]))
    }

    /// Analytic two-multiplier step; returns whether anything moved.
    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (alph1, alph2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((alph2 - alph1).max(0.0), (c + alph2 - alph1).min(c))
        } else {
            ((alph1 + alph2 - c).max(0.0), (alph1 + alph2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let eta = (self.k(i1, i1) + self.k(i2, i2) - 2.0 * self.k(i1, i2)).max(MIN_CURVATURE);
        let mut a2 = (alph2 + y2 * (self.f[i1] - self.f[i2]) / eta).clamp(lo, hi);
        // snap to the box so bound status is exact
        if a2 <= c * 1e-12 {
            a2 = 0.0;
        } else if a2 >= c * (1.0 - 1e-12) {
            a2 = c;
        }
        let mut a1 = alph1 + s * (alph2 - a2);
        if a1 <= c * 1e-12 {
            a1 = 0.0;
        } else if a1 >= c * (1.0 - 1e-12) {
            a1 = c;
        }
        if a1 == alph1 && a2 == alph2 {
            return false;
        }
        let d1 = y1 * (a1 - alph1);
        let d2 = y2 * (a2 - alph2);
        let n = self.n;
        let (row1, row2) = (&self.gram[i1 * n..(i1 + 1) * n], &self.gram[i2 * n..(i2 + 1) * n]);
        for ((f, k1), k2) in self.f.iter_mut().zip(row1).zip(row2) {
            *f += d1 * k1 + d2 * k2;
        }
        self.alpha[i1] = a1;
        self.alpha[i2] = a2;
        true
    }

    /// Bias `b = -rho`: mean `F` over unbound vectors, otherwise the
    /// midpoint of the feasible interval.
    fn bias(&self) -> f64 {
        let mut sum = 0.0;
        let mut free = 0usize;
        let mut upper = f64::INFINITY;
        let mut lower = f64::NEG_INFINITY;
        for i in 0..self.n {
            let a = self.alpha[i];
            if a > 0.0 && a < self.c {
                sum += self.f[i];
                free += 1;
            } else {
                let at_upper = a >= self.c;
                if at_upper == (self.y[i] < 0.0) {
                    upper = upper.min(self.f[i]);
                } else {
                    lower = lower.max(self.f[i]);
                }
            }
        }
        let rho = if free > 0 {
            sum / free as f64
        } else if upper.is_finite() && lower.is_finite() {
            0.5 * (upper + lower)
        } else if upper.is_finite() {
            upper
        } else {
            lower
        };
        -rho
    }
}

/// Trains a binary machine; `positive` samples get target +1.
///
/// Inputs are expected to be already scaled; `params.gamma` must be set
/// (`None` falls back to `1 / dim`). Training stops once the largest KKT
/// violation is within `params.tol`, after `params.max_iter` pair updates,
/// or after `params.max_passes` consecutive steps that leave every
/// multiplier unchanged. Only a run that never moved a multiplier is an
/// error; otherwise the model is returned with `converged` set accordingly.
pub fn train_binary_svm(
    positive: &[&[f64]],
    negative: &[&[f64]],
    positive_id: ClassId,
    negative_id: ClassId,
    params: &SvmParams,
) -> Result<TrainedBinarySvm> {
    params.validate()?;
    if positive.is_empty() || negative.is_empty() {
        return Err(Error::InvalidArgument(alloc::format!(
            "binary SVM needs samples on both sides ({} positive, {} negative)",
            positive.len(),
            negative.len()
        )));
    }
    let dim = positive[0].len();
    if let Some(bad) = positive.iter().chain(negative).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.len(),
        });
    }
    let gamma = params.gamma.unwrap_or(1.0 / dim.max(1) as f64);
    let n = positive.len() + negative.len();

    let mut x = Vec::with_capacity(n * dim);
    let mut y = Vec::with_capacity(n);
    for p in positive {
        x.extend_from_slice(p);
        y.push(1.0);
    }
    for q in negative {
        x.extend_from_slice(q);
        y.push(-1.0);
    }

    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        gram[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf_kernel(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim], gamma);
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }

    let f = y.iter().map(|v| -v).collect();
    let mut solver = Solver {
        n,
        y,
        alpha: vec![0.0; n],
        f,
        gram,
        c: params.c,
    };

    let mut iterations = 0usize;
    let mut idle = 0usize;
    let mut moved = false;
    let mut converged = false;
    while iterations < params.max_iter {
        let Some((up, low, gap)) = solver.most_violating_pair() else {
            converged = true;
            break;
        };
        if gap <= params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        if solver.take_step(low, up) {
            moved = true;
            idle = 0;
        } else {
            idle += 1;
            if idle >= params.max_passes {
                break;
            }
        }
    }
    if !moved && !converged {
        return Err(Error::NoConvergence { iterations });
    }

    let bias = solver.bias();
    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for i in 0..n {
        if solver.alpha[i] > 0.0 {
            support_vectors.extend_from_slice(&x[i * dim..(i + 1) * dim]);
            coefficients.push(solver.alpha[i] * solver.y[i]);
        }
    }
    Ok(TrainedBinarySvm {
        dim,
        support_vectors,
        coefficients,
        bias,
        gamma,
        c: params.c,
        positive: positive_id,
        negative: negative_id,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: f64, gamma: f64) -> SvmParams {
        SvmParams {
            c,
            gamma: Some(gamma),
            ..SvmParams::default()
        }
    }

    #[test]
    fn two_points_on_a_line() {
        let pos: [&[f64]; 1] = [&[1.0]];
        let neg: [&[f64]; 1] = [&[-1.0]];
        let m = train_binary_svm(&pos, &neg, 0, 1, &params(10.0, 0.5)).unwrap();
        assert!(m.converged);
        assert!(m.decision(&[0.9]).unwrap() > 0.0);
        assert!(m.decision(&[-0.9]).unwrap() < 0.0);
        assert!(m.decision(&[0.0]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn xor_is_separated() {
        let pos: [&[f64]; 2] = [&[1.0, 1.0], &[-1.0, -1.0]];
        let neg: [&[f64]; 2] = [&[1.0, -1.0], &[-1.0, 1.0]];
        let m = train_binary_svm(&pos, &neg, 0, 1, &params(10.0, 1.0)).unwrap();
        for p in pos {
            assert!(m.decision(p).unwrap() > 0.0);
        }
        for q in neg {
            assert!(m.decision(q).unwrap() < 0.0);
        }
        assert_eq!(m.n_support(), 4);
    }

    #[test]
    fn multipliers_stay_in_box() {
        // overlapping 1-D classes force bound multipliers
        let pos_v: Vec<[f64; 1]> = (0..20).map(|i| [i as f64 * 0.1]).collect();
        let neg_v: Vec<[f64; 1]> = (0..20).map(|i| [0.5 + i as f64 * 0.1]).collect();
        let pos: Vec<&[f64]> = pos_v.iter().map(|v| &v[..]).collect();
        let neg: Vec<&[f64]> = neg_v.iter().map(|v| &v[..]).collect();
        let p = params(1.0, 2.0);
        let m = train_binary_svm(&pos, &neg, 0, 1, &p).unwrap();
        assert!(m.converged);
        for coef in &m.coefficients {
            assert!(coef.abs() > 0.0 && coef.abs() <= p.c);
        }
        assert!(m.coefficients.iter().any(|c| (c.abs() - p.c).abs() < 1e-12));
    }

    #[test]
    fn empty_side_and_dimension_errors() {
        let pos: [&[f64]; 1] = [&[1.0]];
        assert!(train_binary_svm(&pos, &[], 0, 1, &SvmParams::default()).is_err());
        let neg: [&[f64]; 1] = [&[1.0, 2.0]];
        assert!(matches!(
            train_binary_svm(&pos, &neg, 0, 1, &SvmParams::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let m = train_binary_svm(&pos, &[&[-1.0]], 0, 1, &params(1.0, 1.0)).unwrap();
        assert!(matches!(m.decision(&[0.0, 0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identical_points_with_opposite_labels_still_terminate() {
        let pos: [&[f64]; 2] = [&[0.0], &[0.0]];
        let neg: [&[f64]; 2] = [&[0.0], &[1.0]];
        let m = train_binary_svm(&pos, &neg, 0, 1, &params(1.0, 1.0)).unwrap();
        assert!(m.iterations <= SvmParams::default().max_iter);
        for coef in &m.coefficients {
            assert!(coef.abs() <= 1.0);
        }
    }
}
