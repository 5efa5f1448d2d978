//! Scene spec files.
//!
//! ```text
//! n_bands = 2
//! width = 30
//! height = 20
//! seed = 7
//!
//! [class water]
//! mean = 10, 4
//! covariance = 1, 0.2; 0.2, 1
//! fraction = 0.4
//!
//! [class forest]
//! ...
//! ```
//!
//! Top-level keys come before the first section. Covariance rows are
//! separated by `;`, entries by `,`. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use efs_core::linalg::Matrix;
use efs_core::synth::{ClassSpec, SceneSpec};

use super::{read_text, write_bytes};
use crate::error::{Error, Result};

fn list(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ")
}

pub fn scene_to_string(spec: &SceneSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "n_bands = {}", spec.n_bands);
    let _ = writeln!(s, "width = {}", spec.width);
    let _ = writeln!(s, "height = {}", spec.height);
    let _ = writeln!(s, "seed = {}", spec.seed);
    for c in &spec.classes {
        let rows: Vec<String> = (0..c.covariance.dim()).map(|i| list(c.covariance.row(i))).collect();
        let _ = writeln!(s);
        let _ = writeln!(s, "[class {}]", c.name);
        let _ = writeln!(s, "mean = {}", list(&c.mean));
        let _ = writeln!(s, "covariance = {}", rows.join("; "));
        let _ = writeln!(s, "fraction = {}", c.fraction);
    }
    s
}

pub fn save_scene_spec(spec: &SceneSpec, path: &Path) -> Result<()> {
    write_bytes(path, scene_to_string(spec).as_bytes())
}

pub fn load_scene_spec(path: &Path) -> Result<SceneSpec> {
    let text = read_text(path)?;
    let spec = parse_scene(&text).map_err(|(line, msg)| Error::format(path, format!("line {line}: {msg}")))?;
    spec.validate().map_err(|e| Error::format(path, e.to_string()))?;
    Ok(spec)
}

#[derive(Default)]
struct PartialClass {
    name: String,
    line: usize,
    mean: Option<Vec<f64>>,
    covariance: Option<Vec<Vec<f64>>>,
    fraction: Option<f64>,
}

fn reals(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("cannot parse {:?} as a number", t.trim())))
        .collect()
}

fn parse_scene(text: &str) -> std::result::Result<SceneSpec, (usize, String)> {
    let mut n_bands = None;
    let mut width = None;
    let mut height = None;
    let mut seed = None;
    let mut classes: Vec<PartialClass> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let name = header
                .strip_suffix(']')
                .and_then(|h| h.trim().strip_prefix("class "))
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or((line_no, format!("expected [class NAME], found {line:?}")))?;
            classes.push(PartialClass {
                name: name.to_string(),
                line: line_no,
                ..Default::default()
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or((line_no, format!("expected key = value, found {line:?}")))?;
        let int = |v: &str| v.parse::<u64>().map_err(|_| (line_no, format!("{key} must be a non-negative integer")));
        match classes.last_mut() {
            None => match key {
                "n_bands" => n_bands = Some(int(value)? as usize),
                "width" => width = Some(int(value)? as usize),
                "height" => height = Some(int(value)? as usize),
                "seed" => seed = Some(int(value)?),
                _ => return Err((line_no, format!("unknown key {key:?}"))),
            },
            Some(class) => match key {
                "mean" => class.mean = Some(reals(value).map_err(|m| (line_no, m))?),
                "covariance" => {
                    class.covariance = Some(
                        value
                            .split(';')
                            .map(reals)
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|m| (line_no, m))?,
                    )
                }
                "fraction" => {
                    class.fraction = Some(value.parse().map_err(|_| (line_no, "fraction must be a number".to_string()))?)
                }
                _ => return Err((line_no, format!("unknown class key {key:?}"))),
            },
        }
    }

    let missing = |k: &str| (0usize, format!("missing top-level key {k:?}"));
    let n_bands = n_bands.ok_or_else(|| missing("n_bands"))?;
    let mut out = Vec::with_capacity(classes.len());
    for c in classes {
        let need = |k: &str| (c.line, format!("class {:?} is missing {k:?}", c.name));
        let rows = c.covariance.ok_or_else(|| need("covariance"))?;
        if rows.iter().any(|r| r.len() != rows.len()) {
            return Err((c.line, format!("class {:?} covariance is not square", c.name)));
        }
        let covariance = Matrix::from_row_major(rows.len(), rows.concat()).map_err(|e| (c.line, e.to_string()))?;
        out.push(ClassSpec {
            mean: c.mean.ok_or_else(|| need("mean"))?,
            fraction: c.fraction.ok_or_else(|| need("fraction"))?,
            name: c.name,
            covariance,
        });
    }
    Ok(SceneSpec {
        n_bands,
        width: width.ok_or_else(|| missing("width"))?,
        height: height.ok_or_else(|| missing("height"))?,
        seed: seed.ok_or_else(|| missing("seed"))?,
        classes: out,
    })
}
