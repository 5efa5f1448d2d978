//! Experiment configuration: defaults, `key = value` files and overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use efs_core::separability::{Aggregation, SeparabilityIndex, SeparabilityOptions};
use efs_core::subset::{DEFAULT_MAX_BANDS, DEFAULT_MEMBERS};
use efs_core::svm::SvmParams;

use crate::error::{Error, Result};
use crate::formats::{key_values, read_text};

/// Where the pixels come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    /// The bundled six-band, five-class scene, seeded with the experiment seed.
    BuiltinScene,
    /// A scene spec file (its own seed drives generation).
    SceneFile(PathBuf),
    /// Labelled samples, optionally with an image to classify in full.
    Samples { samples: PathBuf, image: Option<PathBuf> },
}

/// One planned ensemble: an index (or none) and a subset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanEntry {
    pub index: Option<SeparabilityIndex>,
    pub k: usize,
}

impl fmt::Display for PlanEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{i}:{}", self.k),
            None => write!(f, "none:{}", self.k),
        }
    }
}

impl FromStr for PlanEntry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (idx, k) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("plan entry {s:?} should look like index:k")))?;
        let index = match idx.trim().to_ascii_lowercase().as_str() {
            "none" | "e" => None,
            other => Some(other.parse::<SeparabilityIndex>().map_err(|e| Error::Config(e.to_string()))?),
        };
        let k = k
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("plan entry {s:?}: bad subset size")))?;
        Ok(Self { index, k })
    }
}

/// Every index with `k` in {2, 3, 4}, then the unranked 5-band ensemble.
pub fn default_plan() -> Vec<PlanEntry> {
    let mut plan: Vec<PlanEntry> = SeparabilityIndex::ALL
        .iter()
        .flat_map(|&i| (2..=4).map(move |k| PlanEntry { index: Some(i), k }))
        .collect();
    plan.push(PlanEntry { index: None, k: 5 });
    plan
}

pub fn parse_plan(text: &str) -> Result<Vec<PlanEntry>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Ensemble ids: `B1, B2, ...` per index family in plan order, `E` for a
/// single unranked entry (`E1, E2, ...` if there are several).
pub fn ensemble_ids(plan: &[PlanEntry]) -> Vec<String> {
    let prefix = |e: &PlanEntry| e.index.map_or('E', SeparabilityIndex::prefix);
    plan.iter()
        .enumerate()
        .map(|(i, e)| {
            let p = prefix(e);
            let total = plan.iter().filter(|o| prefix(o) == p).count();
            if e.index.is_none() && total == 1 {
                return "E".to_string();
            }
            let ordinal = plan[..=i].iter().filter(|o| prefix(o) == p).count();
            format!("{p}{ordinal}")
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiversitySource {
    /// Pairwise kappa over every pixel of the full base maps.
    Map,
    /// Pairwise kappa over predictions on the test samples.
    Test,
}

impl FromStr for DiversitySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "map" => Ok(Self::Map),
            "test" => Ok(Self::Test),
            other => Err(Error::Config(format!("diversity must be map or test, got {other:?}"))),
        }
    }
}

impl fmt::Display for DiversitySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Map => "map",
            Self::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: Input,
    pub train_fraction: f64,
    pub seed: u64,
    pub plan: Vec<PlanEntry>,
    /// Base classifiers per ensemble.
    pub members: usize,
    pub svm: SvmParams,
    pub separability: SeparabilityOptions,
    pub max_bands: usize,
    /// `None` uses full maps when an image is available, test predictions otherwise.
    pub diversity: Option<DiversitySource>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: Input::BuiltinScene,
            train_fraction: 0.5,
            seed: 0,
            plan: default_plan(),
            members: DEFAULT_MEMBERS,
            svm: SvmParams::default(),
            separability: SeparabilityOptions::default(),
            max_bands: DEFAULT_MAX_BANDS,
            diversity: None,
            output: PathBuf::from("efs-out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting. Relative paths are joined to `base`.
    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = |v: &str| base.join(v);
        match key {
            "scene" => {
                self.input = if value.eq_ignore_ascii_case("builtin") {
                    Input::BuiltinScene
                } else {
                    Input::SceneFile(path(value))
                }
            }
            "samples" => {
                let image = match &self.input {
                    Input::Samples { image, .. } => image.clone(),
                    _ => None,
                };
                self.input = Input::Samples {
                    samples: path(value),
                    image,
                };
            }
            "image" => match &mut self.input {
                Input::Samples { image, .. } => *image = Some(path(value)),
                _ => return Err(Error::Config("image needs samples to be set first".into())),
            },
            "train_fraction" => self.train_fraction = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "plan" => self.plan = parse_plan(value)?,
            "members" | "m" => self.members = parse(key, value)?,
            "c" => self.svm.c = parse(key, value)?,
            "gamma" => {
                self.svm.gamma = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "tol" => self.svm.tol = parse(key, value)?,
            "max_passes" => self.svm.max_passes = parse(key, value)?,
            "max_iter" => self.svm.max_iter = parse(key, value)?,
            "aggregation" => {
                self.separability.aggregation =
                    value.parse::<Aggregation>().map_err(|e| Error::Config(e.to_string()))?
            }
            "td_scale" => self.separability.td_scale = parse(key, value)?,
            "max_bands" => self.max_bands = parse(key, value)?,
            "diversity" => self.diversity = Some(value.parse()?),
            "output" => self.output = path(value),
            _ => return Err(Error::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies every setting in a config file on top of `self`.
    pub fn apply_file(&mut self, file: &Path) -> Result<()> {
        let text = read_text(file).map_err(|e| Error::Config(e.to_string()))?;
        let base = file.parent().unwrap_or(Path::new(""));
        for (line, kv) in key_values(&text) {
            let (k, v) = kv.map_err(|l| Error::Config(format!("{}:{line}: expected key = value, got {l:?}", file.display())))?;
            self.set(k, v, base)
                .map_err(|e| Error::Config(format!("{}:{line}: {e}", file.display())))?;
        }
        Ok(())
    }

    pub fn validate(&self, n_bands: usize) -> Result<()> {
        if self.plan.is_empty() {
            return Err(Error::Config("the ensemble plan is empty".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        if self.members == 0 {
            return Err(Error::Config("members must be at least 1".into()));
        }
        if !(self.separability.td_scale > 0.0 && self.separability.td_scale.is_finite()) {
            return Err(Error::Config("td_scale must be positive".into()));
        }
        self.svm.validate().map_err(|e| Error::Config(e.to_string()))?;
        for e in &self.plan {
            if e.k == 0 || e.k > n_bands {
                return Err(Error::Config(format!("plan entry {e}: subset size must be in 1..={n_bands}")));
            }
            let available = efs_core::subset::binomial(n_bands, e.k);
            if self.members > available {
                return Err(Error::Config(format!(
                    "plan entry {e}: {} members requested but only {available} subsets exist",
                    self.members
                )));
            }
        }
        if n_bands > self.max_bands {
            return Err(Error::Config(format!("{n_bands} bands exceed max_bands = {}", self.max_bands)));
        }
        Ok(())
    }
}
