//! Plain-text `svm-model v1` format.
//!
//! ```text
//! svm-model v1
//! n_bands 6
//! n_classes 2
//! subset 1|4
//! class 0 built-up
//! class 1 water
//! scaler_mean <d values>
//! scaler_std <d values>
//! scaler_constant <d of 0|1>
//! machine 0 1
//! c 10
//! gamma 0.5
//! bias -0.25
//! converged 1
//! iterations 37
//! support 2
//! sv <alpha*y> <d values>
//! sv <alpha*y> <d values>
//! end
//! ```
//!
//! Reals are written in shortest round-trip form, so a save/load cycle is
//! exact.

use std::fmt::Write as _;
use std::path::Path;

use efs_core::dataset::ClassLegend;
use efs_core::stats::BandSubset;
use efs_core::svm::{FeatureScaler, MulticlassSvm, TrainedBinarySvm};

use super::{read_text, write_bytes};
use crate::error::{Error, Result};

const MAGIC: &str = "svm-model v1";

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &MulticlassSvm, legend: &ClassLegend) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "n_bands {}", model.n_bands);
    let _ = writeln!(s, "n_classes {}", model.n_classes);
    let _ = writeln!(s, "subset {}", model.subset.one_based("|"));
    for (id, name) in legend.iter() {
        let _ = writeln!(s, "class {id} {name}");
    }
    let _ = writeln!(s, "scaler_mean {}", join(&model.scaler.mean));
    let _ = writeln!(s, "scaler_std {}", join(&model.scaler.std));
    let flags: Vec<&str> = model.scaler.constant.iter().map(|&c| if c { "1" } else { "0" }).collect();
    let _ = writeln!(s, "scaler_constant {}", flags.join(" "));
    for m in &model.machines {
        let _ = writeln!(s, "machine {} {}", m.positive, m.negative);
        let _ = writeln!(s, "c {}", m.c);
        let _ = writeln!(s, "gamma {}", m.gamma);
        let _ = writeln!(s, "bias {}", m.bias);
        let _ = writeln!(s, "converged {}", u8::from(m.converged));
        let _ = writeln!(s, "iterations {}", m.iterations);
        let _ = writeln!(s, "support {}", m.n_support());
        for i in 0..m.n_support() {
            let _ = writeln!(s, "sv {} {}", m.coefficients[i], join(m.support_vector(i)));
        }
    }
    let _ = writeln!(s, "end");
    s
}

pub fn save_model(model: &MulticlassSvm, legend: &ClassLegend, path: &Path) -> Result<()> {
    write_bytes(path, model_to_string(model, legend).as_bytes())
}

pub fn load_model(path: &Path) -> Result<(MulticlassSvm, ClassLegend)> {
    let text = read_text(path)?;
    parse_model(&text).map_err(|(line, msg)| Error::format(path, format!("line {line}: {msg}")))
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn peek_key(&mut self) -> Option<&'a str> {
        self.inner.peek().map(|(_, l)| l.split_whitespace().next().unwrap_or(""))
    }

    /// The rest of the next line, which must start with `key`.
    fn expect(&mut self, key: &str) -> ParseResult<&'a str> {
        let (i, line) = self.inner.next().ok_or((self.last + 1, format!("expected {key:?}, found end of file")))?;
        self.last = i + 1;
        let line = line.trim_end();
        let (k, rest) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err((i + 1, format!("expected {key:?}, found {k:?}")));
        }
        Ok(rest)
    }

    fn err(&self, msg: impl Into<String>) -> (usize, String) {
        (self.last, msg.into())
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> ParseResult<T> {
        let v = self.expect(key)?;
        v.trim().parse().map_err(|_| self.err(format!("bad {key} value {v:?}")))
    }

    fn reals(&mut self, key: &str, n: usize) -> ParseResult<Vec<f64>> {
        let v = self.expect(key)?;
        let out = v
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| self.err(format!("bad number in {key}")))?;
        if out.len() != n {
            return Err(self.err(format!("{key} has {} values, expected {n}", out.len())));
        }
        Ok(out)
    }
}

fn parse_model(text: &str) -> ParseResult<(MulticlassSvm, ClassLegend)> {
    let mut lines = Lines {
        inner: text.lines().enumerate().peekable(),
        last: 0,
    };
    let (_, first) = lines.inner.next().ok_or((1, "empty file".to_string()))?;
    lines.last = 1;
    if first.trim_end() != MAGIC {
        return Err((1, format!("expected {MAGIC:?} header")));
    }
    let n_bands: usize = lines.number("n_bands")?;
    let n_classes: usize = lines.number("n_classes")?;
    let subset_text = lines.expect("subset")?;
    let subset = BandSubset::parse_one_based(subset_text, n_bands).map_err(|e| lines.err(e.to_string()))?;
    let d = subset.len();
    let mut names = Vec::with_capacity(n_classes);
    for id in 0..n_classes {
        let rest = lines.expect("class")?;
        let (i, name) = rest.split_once(' ').ok_or_else(|| lines.err("class line needs an id and a name"))?;
        if i.parse::<usize>() != Ok(id) {
            return Err(lines.err(format!("expected class id {id}")));
        }
        names.push(name.to_string());
    }
    let legend = ClassLegend::new(names).map_err(|e| lines.err(e.to_string()))?;
    let mean = lines.reals("scaler_mean", d)?;
    let std = lines.reals("scaler_std", d)?;
    let constant = lines
        .reals("scaler_constant", d)?
        .into_iter()
        .map(|v| v != 0.0)
        .collect();
    if std.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(lines.err("scaler_std entries must be positive"));
    }

    let mut machines = Vec::new();
    while lines.peek_key() == Some("machine") {
        let pair = lines.expect("machine")?;
        let ids: Vec<u16> = pair
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| lines.err("bad machine class pair"))?;
        let [positive, negative] = ids[..] else {
            return Err(lines.err("machine line needs two class ids"));
        };
        if usize::from(positive.max(negative)) >= n_classes || positive == negative {
            return Err(lines.err("machine class pair out of range"));
        }
        let c: f64 = lines.number("c")?;
        let gamma: f64 = lines.number("gamma")?;
        let bias: f64 = lines.number("bias")?;
        let converged = lines.number::<u8>("converged")? != 0;
        let iterations: usize = lines.number("iterations")?;
        let n_sv: usize = lines.number("support")?;
        let mut support_vectors = Vec::with_capacity(n_sv * d);
        let mut coefficients = Vec::with_capacity(n_sv);
        for _ in 0..n_sv {
            let row = lines.reals("sv", d + 1)?;
            coefficients.push(row[0]);
            support_vectors.extend_from_slice(&row[1..]);
        }
        machines.push(TrainedBinarySvm {
            dim: d,
            support_vectors,
            coefficients,
            bias,
            gamma,
            c,
            positive,
            negative,
            converged,
            iterations,
        });
    }
    lines.expect("end")?;
    if machines.len() != n_classes * n_classes.saturating_sub(1) / 2 {
        return Err(lines.err(format!("{} machines for {n_classes} classes", machines.len())));
    }
    let model = MulticlassSvm {
        n_bands,
        subset,
        n_classes,
        scaler: FeatureScaler { mean, std, constant },
        machines,
    };
    Ok((model, legend))
}
