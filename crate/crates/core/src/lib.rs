//! Ensemble feature selection for multispectral land-cover classification.
//!
//! The crate ranks spectral band subsets by Gaussian class-separability
//! indices (Bhattacharyya distance, divergence, transformed divergence),
//! trains one RBF support vector machine per top-ranked subset, fuses the
//! resulting label maps by plurality vote and measures the ensembles with
//! overall accuracy, kappa, pairwise-kappa diversity, binomial Z-tests and
//! Pearson correlation.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (an allocator is required). File formats, the experiment
//! runner and the command-line interface live in the companion `efs` crate.
//!
//! Module map:
//! - [`dataset`]: images, legends, labelled samples, label maps, stratified splits
//! - [`stats`]: per-class mean/covariance estimation, band projection, regularisation
//! - [`separability`]: pairwise and multiclass separability indices
//! - [`subset`]: exhaustive band-subset enumeration, ranking and ensemble composition
//! - [`svm`]: feature scaling, SMO-trained RBF SVM, one-vs-one voting, ML baseline
//! - [`ensemble`]: per-pixel majority vote and map fusion
//! - [`eval`]: confusion matrices, accuracy, kappa, diversity, Z-tests, correlation
//! - [`synth`]: seeded Gaussian-mixture scene generator

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod ensemble;
mod error;
pub mod eval;
pub mod linalg;
pub mod separability;
pub mod stats;
pub mod subset;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

/// Class identifier; contiguous from 0 in legend order.
pub type ClassId = u16;
