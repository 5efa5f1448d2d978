//! Exhaustive band-subset search and ensemble composition.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::separability::{multiclass_separability, SeparabilityIndex, SeparabilityOptions};
use crate::stats::{BandSubset, StatisticsSet};
use crate::{Error, Result};

/// Largest band count the exhaustive search accepts by default.
pub const DEFAULT_MAX_BANDS: usize = 24;

/// Default number of base classifiers per ensemble.
pub const DEFAULT_MEMBERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub separability: SeparabilityOptions,
    pub max_bands: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            separability: SeparabilityOptions::default(),
            max_bands: DEFAULT_MAX_BANDS,
        }
    }
}

/// Subsets of one size, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetRanking {
    pub index: SeparabilityIndex,
    pub k: usize,
    pub entries: Vec<(BandSubset, f64)>,
}

/// The base-classifier feature spaces of one ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub ensemble_id: String,
    /// `None` for the unranked (lexicographic) ensemble.
    pub index: Option<SeparabilityIndex>,
    pub k: usize,
    pub members: Vec<BandSubset>,
}

/// Binomial coefficient, saturating on overflow.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// All size-`k` subsets of `0..n_bands` in lexicographic order.
pub fn enumerate_band_subsets(n_bands: usize, k: usize) -> Result<Vec<BandSubset>> {
    if k == 0 || k > n_bands {
        return Err(Error::InvalidArgument(format!(
            "subset size {k} not in 1..={n_bands}"
        )));
    }
    let mut out = Vec::with_capacity(binomial(n_bands, k));
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(BandSubset::new(current.clone(), n_bands)?);
        // rightmost position that can still advance
        let Some(pos) = (0..k).rev().find(|&i| current[i] < n_bands - k + i) else {
            break;
        };
        current[pos] += 1;
        for i in (pos + 1)..k {
            current[i] = current[i - 1] + 1;
        }
    }
    Ok(out)
}

fn check_search_size(n_bands: usize, options: &SearchOptions) -> Result<()> {
    if n_bands > options.max_bands {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search over {n_bands} bands exceeds the cap of {}",
            options.max_bands
        )));
    }
    Ok(())
}

/// Sorts by score descending, ties by band order ascending.
pub fn sort_ranking(entries: &mut [(BandSubset, f64)]) {
    entries.sort_by(|(sa, va), (sb, vb)| vb.total_cmp(va).then_with(|| sa.cmp(sb)));
}

/// Scores every size-`k` subset with `index` and sorts best first.
pub fn rank_subsets(
    stats: &StatisticsSet,
    k: usize,
    index: SeparabilityIndex,
    options: &SearchOptions,
) -> Result<SubsetRanking> {
    check_search_size(stats.n_bands(), options)?;
    let subsets = enumerate_band_subsets(stats.n_bands(), k)?;
    let mut entries = subsets
        .into_iter()
        .map(|s| {
            let score = multiclass_separability(stats, &s, index, &options.separability)?;
            Ok((s, score.value))
        })
        .collect::<Result<Vec<_>>>()?;
    sort_ranking(&mut entries);
    Ok(SubsetRanking { index, k, entries })
}

/// Takes the top `m` subsets of a ranking.
pub fn compose_ensemble(ranking: &SubsetRanking, m: usize, id: &str) -> Result<EnsembleConfig> {
    if m == 0 || m > ranking.entries.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot take {m} members from a ranking of {}",
            ranking.entries.len()
        )));
    }
    Ok(EnsembleConfig {
        ensemble_id: id.into(),
        index: Some(ranking.index),
        k: ranking.k,
        members: ranking.entries[..m].iter().map(|(s, _)| s.clone()).collect(),
    })
}

/// Ensemble built without any separability index: the first `m` size-`k`
/// subsets in lexicographic order.
pub fn compose_unranked(n_bands: usize, k: usize, m: usize, id: &str, options: &SearchOptions) -> Result<EnsembleConfig> {
    check_search_size(n_bands, options)?;
    let all = enumerate_band_subsets(n_bands, k)?;
    if m == 0 || m > all.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot take {m} members from {} subsets of size {k}",
            all.len()
        )));
    }
    Ok(EnsembleConfig {
        ensemble_id: id.into(),
        index: None,
        k,
        members: all.into_iter().take(m).collect(),
    })
}
