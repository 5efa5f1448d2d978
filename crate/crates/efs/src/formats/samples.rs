//! Labelled samples as CSV: `band_1,...,band_N,label`.

use std::path::Path;

use efs_core::dataset::{ClassLegend, SampleSet};

use super::write_bytes;
use crate::error::{Error, Result};

/// Reads samples and builds the legend from the distinct labels, sorted
/// by name.
pub fn load_samples(path: &Path) -> Result<(SampleSet, ClassLegend)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let n = headers.len();
    if n < 2 {
        return Err(Error::format(path, "header needs at least one band column and a label column"));
    }
    for (i, h) in headers.iter().take(n - 1).enumerate() {
        if h.trim() != format!("band_{}", i + 1) {
            return Err(Error::format(path, format!("column {} should be band_{}, found {h:?}", i + 1, i + 1)));
        }
    }
    if headers[n - 1].trim() != "label" {
        return Err(Error::format(path, "last column must be label"));
    }
    let n_bands = n - 1;

    let mut features = Vec::new();
    let mut names = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = row + 2;
        for (b, field) in record.iter().take(n_bands).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("line {line}, band_{}: cannot parse {field:?}", b + 1)))?;
            if !v.is_finite() {
                return Err(Error::format(path, format!("line {line}, band_{}: non-finite value", b + 1)));
            }
            features.push(v);
        }
        let label = record[n_bands].trim();
        if label.is_empty() {
            return Err(Error::format(path, format!("line {line}: empty label")));
        }
        names.push(label.to_string());
    }
    if names.is_empty() {
        return Err(Error::format(path, "no data rows"));
    }
    let legend = ClassLegend::from_names(names.iter().map(String::as_str)).map_err(|e| Error::format(path, e.to_string()))?;
    let labels = names
        .iter()
        .map(|n| legend.id_of(n).expect("legend built from these labels"))
        .collect();
    let samples = SampleSet::from_parts(n_bands, features, labels).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((samples, legend))
}

pub fn samples_to_csv(samples: &SampleSet, legend: &ClassLegend) -> Result<Vec<u8>> {
    samples
        .validate_labels(legend)
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=samples.n_bands()).map(|b| format!("band_{b}")).collect();
    header.push("label".into());
    w.write_record(&header).expect("write to memory");
    for (x, l) in samples.iter() {
        let mut row: Vec<String> = x.iter().map(f64::to_string).collect();
        row.push(legend.name(l).expect("validated label").to_string());
        w.write_record(&row).expect("write to memory");
    }
    Ok(w.into_inner().expect("flush to memory"))
}

pub fn save_samples(samples: &SampleSet, legend: &ClassLegend, path: &Path) -> Result<()> {
    write_bytes(path, &samples_to_csv(samples, legend)?)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            let csv::ErrorKind::Io(io) = e.into_kind() else { unreachable!() };
            Error::io(path, io)
        }
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::format(
            path,
            format!(
                "ragged row{}: expected {expected_len} fields, found {len}",
                pos.as_ref().map(|p| format!(" at line {}", p.line())).unwrap_or_default()
            ),
        ),
        _ => Error::format(path, e.to_string()),
    }
}
