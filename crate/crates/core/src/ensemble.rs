//! Plurality-vote fusion of base classification maps.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::ClassificationMap;
use crate::subset::EnsembleConfig;
use crate::{ClassId, Error, Result};

/// Most frequent label; ties go to the lowest class id.
pub fn majority_vote_pixel(labels: &[ClassId]) -> Result<ClassId> {
    let Some(&max) = labels.iter().max() else {
        return Err(Error::InvalidArgument("majority vote over no voters".into()));
    };
    let mut counts = vec![0u32; usize::from(max) + 1];
    for &l in labels {
        counts[usize::from(l)] += 1;
    }
    Ok(crate::svm::argmax_votes(&counts))
}

/// Per-position plurality vote across equally long label sequences.
pub fn fuse_labels(voters: &[&[ClassId]], n_classes: usize) -> Result<Vec<ClassId>> {
    let Some(first) = voters.first() else {
        return Err(Error::InvalidArgument("fusion needs at least one voter".into()));
    };
    let n = first.len();
    if let Some(bad) = voters.iter().find(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let mut counts = vec![0u32; n_classes];
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        counts.iter_mut().for_each(|c| *c = 0);
        for v in voters {
            let l = v[p];
            match counts.get_mut(usize::from(l)) {
                Some(c) => *c += 1,
                None => {
                    return Err(Error::LabelOutOfRange {
                        label: l,
                        n_classes,
                    })
                }
            }
        }
        out.push(crate::svm::argmax_votes(&counts));
    }
    Ok(out)
}

/// Fuses maps sharing one grid and legend.
pub fn fuse_maps(base_maps: &[ClassificationMap]) -> Result<ClassificationMap> {
    let Some(first) = base_maps.first() else {
        return Err(Error::InvalidArgument("fusion needs at least one map".into()));
    };
    if let Some(other) = base_maps.iter().find(|m| !m.same_grid(first)) {
        return Err(Error::Mismatch(alloc::format!(
            "map grid {}x{} ({} classes) differs from {}x{} ({} classes)",
            other.width(),
            other.height(),
            other.legend().len(),
            first.width(),
            first.height(),
            first.legend().len()
        )));
    }
    let voters: Vec<&[ClassId]> = base_maps.iter().map(ClassificationMap::labels).collect();
    let labels = fuse_labels(&voters, first.legend().len())?;
    ClassificationMap::new(first.width(), first.height(), labels, first.legend().clone())
}

/// An ensemble's base maps and their fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRun {
    pub config: EnsembleConfig,
    pub base_maps: Vec<ClassificationMap>,
    pub fused: ClassificationMap,
}

impl EnsembleRun {
    pub fn new(config: EnsembleConfig, base_maps: Vec<ClassificationMap>) -> Result<Self> {
        if base_maps.len() != config.members.len() {
            return Err(Error::Mismatch(alloc::format!(
                "ensemble {} has {} members but {} maps",
                config.ensemble_id,
                config.members.len(),
                base_maps.len()
            )));
        }
        let fused = fuse_maps(&base_maps)?;
        Ok(Self {
            config,
            base_maps,
            fused,
        })
    }
}
