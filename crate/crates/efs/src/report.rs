//! Report files and experiment artefacts.
//!
//! `emit_report` writes:
//! - `report_ensembles.csv`: one row per base classifier (`member` 1..m)
//!   and one per ensemble (`member` = `ensemble`, with diversity filled in);
//! - `report_kappas.csv`: every in-ensemble pairwise kappa;
//! - `report_ztests.csv`: lower triangle of ensemble-vs-ensemble Z-tests;
//! - `plot_diversity_accuracy.csv`: `ensemble_id,diversity_mean,diversity_variance,accuracy`;
//! - `summary.txt`.
//!
//! Reals use shortest round-trip formatting; missing values are empty.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use efs_core::eval::{z_test, DiversitySummary};
use efs_core::separability::SeparabilityIndex;
use efs_core::stats::BandSubset;

use crate::config::DiversitySource;
use crate::error::{Error, Result, StageExt};
use crate::experiment::{correlations, BaseResult, EnsembleReport, EnsembleResult, ExperimentOutcome, ZEntry};
use crate::formats::map::save_classification_map;
use crate::formats::ranking::save_ranking;
use crate::formats::samples::{csv_error, save_samples};
use crate::formats::{read_text, write_bytes};

pub const ENSEMBLES_CSV: &str = "report_ensembles.csv";
pub const KAPPAS_CSV: &str = "report_kappas.csv";
pub const ZTESTS_CSV: &str = "report_ztests.csv";
pub const PLOT_CSV: &str = "plot_diversity_accuracy.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

const ENSEMBLE_HEADER: [&str; 10] = [
    "ensemble_id",
    "index",
    "k",
    "member",
    "bands",
    "accuracy",
    "kappa",
    "converged",
    "diversity_mean",
    "diversity_variance",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn index_name(i: Option<SeparabilityIndex>) -> &'static str {
    i.map_or("none", SeparabilityIndex::as_str)
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

pub fn ensembles_csv(report: &EnsembleReport) -> Vec<u8> {
    let mut rows = Vec::new();
    for e in &report.ensembles {
        let head = || vec![e.id.clone(), index_name(e.index).to_string(), e.k.to_string()];
        for (j, b) in e.bases.iter().enumerate() {
            let mut r = head();
            r.extend([
                (j + 1).to_string(),
                b.bands.one_based("|"),
                b.accuracy.to_string(),
                b.kappa.to_string(),
                u8::from(b.converged).to_string(),
                String::new(),
                String::new(),
            ]);
            rows.push(r);
        }
        let mut r = head();
        r.extend([
            "ensemble".to_string(),
            String::new(),
            e.accuracy.to_string(),
            e.kappa.to_string(),
            u8::from(e.bases.iter().all(|b| b.converged)).to_string(),
            opt(e.diversity.as_ref().map(|d| d.mean)),
            opt(e.diversity.as_ref().map(|d| d.variance)),
        ]);
        rows.push(r);
    }
    csv_bytes(&ENSEMBLE_HEADER, rows)
}

pub fn kappas_csv(report: &EnsembleReport) -> Vec<u8> {
    let mut rows = Vec::new();
    for e in &report.ensembles {
        let Some(d) = &e.diversity else { continue };
        let m = e.bases.len();
        let pairs = (0..m).flat_map(|a| ((a + 1)..m).map(move |b| (a, b)));
        for ((a, b), k) in pairs.zip(&d.pairwise_kappas) {
            rows.push(vec![e.id.clone(), (a + 1).to_string(), (b + 1).to_string(), k.to_string()]);
        }
    }
    csv_bytes(&["ensemble_id", "first", "second", "kappa"], rows)
}

pub fn ztests_csv(report: &EnsembleReport) -> Vec<u8> {
    let rows = report.ztests.iter().map(|z| {
        vec![
            z.first.clone(),
            z.second.clone(),
            z.result.z.to_string(),
            z.result.significant.to_string(),
        ]
    });
    csv_bytes(&["ensemble_a", "ensemble_b", "z", "significant"], rows)
}

pub fn plot_csv(report: &EnsembleReport) -> Vec<u8> {
    let rows = report.ensembles.iter().map(|e| {
        vec![
            e.id.clone(),
            opt(e.diversity.as_ref().map(|d| d.mean)),
            opt(e.diversity.as_ref().map(|d| d.variance)),
            e.accuracy.to_string(),
        ]
    });
    csv_bytes(&["ensemble_id", "diversity_mean", "diversity_variance", "accuracy"], rows)
}

fn fmt_corr(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

pub fn summary_text(report: &EnsembleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed: {}", report.seed);
    let _ = writeln!(s, "train samples: {}", report.n_train);
    let _ = writeln!(s, "test samples: {}", report.n_test);
    let _ = writeln!(s, "diversity source: {}", report.diversity_source);
    let _ = writeln!(s, "ensembles: {}", report.ensembles.len());
    let _ = writeln!(s, "correlation accuracy vs diversity mean: {}", fmt_corr(report.correlation_mean));
    let _ = writeln!(s, "correlation accuracy vs diversity variance: {}", fmt_corr(report.correlation_variance));
    let significant = report.ztests.iter().filter(|z| z.result.significant).count();
    let _ = writeln!(s, "significant z-tests (|z| > 1.96): {significant} of {}", report.ztests.len());
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<6} {:<24} {:>2} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "id", "index", "k", "accuracy", "kappa", "div.mean", "div.var", "min.base"
    );
    for e in &report.ensembles {
        let d = |f: fn(&DiversitySummary) -> f64| e.diversity.as_ref().map_or("-".to_string(), |x| format!("{:.4}", f(x)));
        let _ = writeln!(
            s,
            "{:<6} {:<24} {:>2} {:>9.4} {:>9.4} {:>9} {:>9} {:>9.4}",
            e.id,
            index_name(e.index),
            e.k,
            e.accuracy,
            e.kappa,
            d(|x| x.mean),
            d(|x| x.variance),
            e.min_base_accuracy()
        );
    }
    s
}

pub fn emit_report(report: &EnsembleReport, dir: &Path) -> Result<()> {
    write_bytes(&dir.join(ENSEMBLES_CSV), &ensembles_csv(report))?;
    write_bytes(&dir.join(KAPPAS_CSV), &kappas_csv(report))?;
    write_bytes(&dir.join(ZTESTS_CSV), &ztests_csv(report))?;
    write_bytes(&dir.join(PLOT_CSV), &plot_csv(report))?;
    write_bytes(&dir.join(SUMMARY_TXT), summary_text(report).as_bytes())
}

/// Column name of member `j` (0-based) of ensemble `id` in `test_predictions.csv`.
pub fn member_column(id: &str, j: usize) -> String {
    format!("{id}.{}", j + 1)
}

/// Report files plus `test_samples.csv`, `test_predictions.csv`,
/// `rankings/<id>.csv` and, with an image, `maps/<id>.<j>` and `maps/<id>`
/// label rasters with a `maps/grid.txt` size file.
pub fn write_outcome(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    let report = &outcome.report;
    emit_report(report, dir)?;
    save_samples(&outcome.test_set, &outcome.legend, &dir.join("test_samples.csv"))?;

    let mut header = vec!["sample".to_string(), "pixel".to_string()];
    for e in &report.ensembles {
        header.extend((0..e.bases.len()).map(|j| member_column(&e.id, j)));
        header.push(e.id.clone());
    }
    let rows = (0..outcome.test_set.len()).map(|i| {
        let mut r = vec![i.to_string(), outcome.test_pixels.as_ref().map(|p| p[i].to_string()).unwrap_or_default()];
        for (members, fused) in &outcome.test_predictions {
            r.extend(members.iter().map(|m| m[i].to_string()));
            r.push(fused[i].to_string());
        }
        r
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_bytes(&dir.join("test_predictions.csv"), &csv_bytes(&header_refs, rows))?;

    for (e, ranking) in report.ensembles.iter().zip(&outcome.rankings) {
        if let Some(r) = ranking {
            save_ranking(r, &dir.join("rankings").join(format!("{}.csv", e.id)))?;
        }
    }
    for (e, maps) in report.ensembles.iter().zip(&outcome.maps) {
        let Some((base, fused)) = maps else { continue };
        let maps_dir = dir.join("maps");
        for (j, m) in base.iter().enumerate() {
            save_classification_map(m, &maps_dir.join(member_column(&e.id, j)))?;
        }
        save_classification_map(fused, &maps_dir.join(&e.id))?;
        write_bytes(
            &maps_dir.join("grid.txt"),
            format!("width={}\nheight={}\n", fused.width(), fused.height()).as_bytes(),
        )?;
    }
    Ok(())
}

fn parse_f64(path: &Path, line: usize, v: &str) -> Result<f64> {
    v.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("line {line}: bad number {v:?}")))
}

/// Rebuilds a report from `report_ensembles.csv` and `report_kappas.csv`,
/// recomputing Z-tests and correlations. `n_test` is the test-set size
/// the accuracies were measured on.
pub fn load_report(dir: &Path, n_test: usize, seed: u64, diversity_source: DiversitySource) -> Result<EnsembleReport> {
    let path = dir.join(ENSEMBLES_CSV);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(&path, e))?;
    if headers.iter().ne(ENSEMBLE_HEADER) {
        return Err(Error::format(&path, format!("header must be {}", ENSEMBLE_HEADER.join(","))));
    }
    let mut ensembles: Vec<EnsembleResult> = Vec::new();
    let mut pending: Vec<BaseResult> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&path, e))?;
        let line = i + 2;
        let bad = |m: &str| Error::format(&path, format!("line {line}: {m}"));
        let index = match &rec[1] {
            "none" => None,
            s => Some(s.parse::<SeparabilityIndex>().map_err(|e| bad(&e.to_string()))?),
        };
        let k: usize = rec[2].parse().map_err(|_| bad("bad k"))?;
        let accuracy = parse_f64(&path, line, &rec[5])?;
        let kappa = parse_f64(&path, line, &rec[6])?;
        let converged = &rec[7] == "1";
        if &rec[3] == "ensemble" {
            ensembles.push(EnsembleResult {
                id: rec[0].to_string(),
                index,
                k,
                bases: std::mem::take(&mut pending),
                accuracy,
                kappa,
                diversity: None,
            });
        } else {
            // band count is only known from the widest index
            let bands: Vec<usize> = rec[4]
                .split('|')
                .map(|b| b.trim().parse::<usize>().ok().filter(|&b| b >= 1).map(|b| b - 1))
                .collect::<Option<_>>()
                .ok_or_else(|| bad("bad bands"))?;
            let n = bands.iter().max().map_or(0, |m| m + 1);
            pending.push(BaseResult {
                bands: BandSubset::new(bands, n).map_err(|e| bad(&e.to_string()))?,
                accuracy,
                kappa,
                converged,
            });
        }
    }
    if !pending.is_empty() {
        return Err(Error::format(&path, "base rows after the last ensemble row"));
    }

    let kpath = dir.join(KAPPAS_CSV);
    let mut reader = csv::Reader::from_path(&kpath).map_err(|e| csv_error(&kpath, e))?;
    let mut kappas: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&kpath, e))?;
        kappas.entry(rec[0].to_string()).or_default().push(parse_f64(&kpath, i + 2, &rec[3])?);
    }
    for e in &mut ensembles {
        if let Some(list) = kappas.remove(&e.id) {
            e.diversity = Some(DiversitySummary::from_kappas(list).stage("diversity", e.id.as_str())?);
        }
    }

    let mut ztests = Vec::new();
    for i in 1..ensembles.len() {
        for j in 0..i {
            let result = z_test(ensembles[i].accuracy, n_test as u64, ensembles[j].accuracy, n_test as u64)
                .stage("z-test", format!("{} vs {}", ensembles[i].id, ensembles[j].id))?;
            ztests.push(ZEntry {
                first: ensembles[i].id.clone(),
                second: ensembles[j].id.clone(),
                result,
            });
        }
    }
    let (correlation_mean, correlation_variance) = correlations(&ensembles);
    Ok(EnsembleReport {
        seed,
        n_train: 0,
        n_test,
        diversity_source,
        ensembles,
        ztests,
        correlation_mean,
        correlation_variance,
    })
}

/// Reads `key=value` size from `maps/grid.txt`.
pub fn read_grid(dir: &Path) -> Result<(usize, usize)> {
    let path = dir.join("maps").join("grid.txt");
    let text = read_text(&path)?;
    let mut w = None;
    let mut h = None;
    for (line, kv) in crate::formats::key_values(&text) {
        let (k, v) = kv.map_err(|_| Error::format(&path, format!("line {line}: expected key=value")))?;
        let n = v.parse().map_err(|_| Error::format(&path, format!("line {line}: bad integer")))?;
        match k {
            "width" => w = Some(n),
            "height" => h = Some(n),
            _ => {}
        }
    }
    w.zip(h).ok_or_else(|| Error::format(&path, "needs width and height"))
}
