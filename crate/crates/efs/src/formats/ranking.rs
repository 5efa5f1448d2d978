//! Ranking CSV: `rank,bands,score`, bands 1-based and `|`-joined.

use std::path::Path;

use efs_core::stats::BandSubset;
use efs_core::subset::SubsetRanking;

use super::samples::csv_error;
use super::write_bytes;
use crate::error::{Error, Result};

pub fn ranking_to_csv(ranking: &SubsetRanking) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "bands", "score"]).expect("write to memory");
    for (i, (subset, score)) in ranking.entries.iter().enumerate() {
        w.write_record([(i + 1).to_string(), subset.one_based("|"), score.to_string()])
            .expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn save_ranking(ranking: &SubsetRanking, path: &Path) -> Result<()> {
    write_bytes(path, &ranking_to_csv(ranking))
}

/// Reads `(subset, score)` rows in file order.
pub fn load_ranking(path: &Path, n_bands: usize) -> Result<Vec<(BandSubset, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().map(str::trim).ne(["rank", "bands", "score"]) {
        return Err(Error::format(path, "header must be rank,bands,score"));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + 2;
        let subset = BandSubset::parse_one_based(&record[1], n_bands)
            .map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        let score: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, format!("line {line}: bad score {:?}", &record[2])))?;
        out.push((subset, score));
    }
    Ok(out)
}
