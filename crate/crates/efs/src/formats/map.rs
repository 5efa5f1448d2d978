//! Label rasters: `<name>.map.bin` (uint16 little-endian, row-major) and
//! `<name>.legend.csv` (`class_id,class_name`). The grid size travels in
//! the caller's image header, so loading takes width and height.

use std::fs;
use std::path::{Path, PathBuf};

use efs_core::dataset::{ClassLegend, ClassificationMap};

use super::samples::csv_error;
use super::{with_suffix, write_bytes};
use crate::error::{Error, Result};

pub fn map_paths(base: &Path) -> (PathBuf, PathBuf) {
    (with_suffix(base, ".map.bin"), with_suffix(base, ".legend.csv"))
}

pub fn legend_to_csv(legend: &ClassLegend) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class_id", "class_name"]).expect("write to memory");
    for (id, name) in legend.iter() {
        w.write_record([id.to_string().as_str(), name]).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn load_legend(path: &Path) -> Result<ClassLegend> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().map(str::trim).ne(["class_id", "class_name"]) {
        return Err(Error::format(path, "header must be class_id,class_name"));
    }
    let mut names = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let id: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, format!("line {}: bad class_id {:?}", i + 2, &record[0])))?;
        if id != i {
            return Err(Error::format(path, format!("line {}: class ids must run 0,1,2,... (found {id})", i + 2)));
        }
        names.push(record[1].to_string());
    }
    ClassLegend::new(names).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes the map after checking every label against its legend.
pub fn save_classification_map(map: &ClassificationMap, base: &Path) -> Result<PathBuf> {
    let k = map.legend().len();
    if let Some(bad) = map.labels().iter().find(|&&l| usize::from(l) >= k) {
        return Err(Error::Config(format!("label {bad} is outside a legend of {k} classes")));
    }
    let (bin, legend) = map_paths(base);
    let bytes: Vec<u8> = map.labels().iter().flat_map(|l| l.to_le_bytes()).collect();
    write_bytes(&bin, &bytes)?;
    write_bytes(&legend, &legend_to_csv(map.legend()))?;
    Ok(bin)
}

pub fn load_classification_map(base: &Path, width: usize, height: usize) -> Result<ClassificationMap> {
    let (bin, legend_path) = map_paths(base);
    let legend = load_legend(&legend_path)?;
    let bytes = fs::read(&bin).map_err(|e| Error::io(&bin, e))?;
    if bytes.len() != width * height * 2 {
        return Err(Error::format(
            &bin,
            format!("size mismatch: {width}x{height} map needs {} bytes, file has {}", width * height * 2, bytes.len()),
        ));
    }
    let labels = bytes.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    ClassificationMap::new(width, height, labels, legend).map_err(|e| Error::format(&bin, e.to_string()))
}
