//! The end-to-end ensemble experiment.

use std::collections::BTreeMap;

use rayon::prelude::*;

use efs_core::dataset::{split_indices, ClassLegend, ClassificationMap, MultibandImage, SampleSet};
use efs_core::ensemble::{fuse_labels, fuse_maps};
use efs_core::eval::{
    confusion_matrix, diversity_summary, kappa, label_diversity, overall_accuracy, pearson_correlation, z_test,
    DiversitySummary, ZTestResult,
};
use efs_core::separability::SeparabilityIndex;
use efs_core::stats::{estimate_class_statistics, BandSubset};
use efs_core::subset::{compose_ensemble, compose_unranked, rank_subsets, EnsembleConfig, SearchOptions, SubsetRanking};
use efs_core::svm::{train_multiclass, MulticlassSvm};
use efs_core::synth::{generate_scene, builtin_scene_spec};
use efs_core::ClassId;

use crate::config::{ensemble_ids, DiversitySource, ExperimentConfig, Input};
use crate::error::{Error, Result, StageExt};
use crate::formats::image::load_image;
use crate::formats::samples::load_samples;
use crate::formats::scene::load_scene_spec;

/// Labelled samples plus, optionally, the image they belong to.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: SampleSet,
    pub legend: ClassLegend,
    pub image: Option<MultibandImage>,
    /// Sample `i` is pixel `i` of the image (true for generated scenes).
    pub samples_are_pixels: bool,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let from_scene = |spec| -> Result<Dataset> {
        let scene = generate_scene(&spec).stage("synth", "scene")?;
        Ok(Dataset {
            samples: scene.samples,
            legend: scene.legend,
            image: Some(scene.image),
            samples_are_pixels: true,
        })
    };
    match &cfg.input {
        Input::BuiltinScene => from_scene(builtin_scene_spec(cfg.seed)),
        Input::SceneFile(path) => from_scene(load_scene_spec(path)?),
        Input::Samples { samples, image } => {
            let (samples, legend) = load_samples(samples)?;
            let image = image.as_deref().map(load_image).transpose()?;
            if let Some(img) = &image {
                if img.bands() != samples.n_bands() {
                    return Err(Error::Config(format!(
                        "image has {} bands but samples have {}",
                        img.bands(),
                        samples.n_bands()
                    )));
                }
            }
            Ok(Dataset {
                samples,
                legend,
                image,
                samples_are_pixels: false,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseResult {
    pub bands: BandSubset,
    pub accuracy: f64,
    pub kappa: f64,
    /// Whether every pairwise machine met the KKT tolerance.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub id: String,
    pub index: Option<SeparabilityIndex>,
    pub k: usize,
    pub bases: Vec<BaseResult>,
    pub accuracy: f64,
    pub kappa: f64,
    /// Absent for single-member ensembles.
    pub diversity: Option<DiversitySummary>,
}

impl EnsembleResult {
    pub fn min_base_accuracy(&self) -> f64 {
        self.bases.iter().map(|b| b.accuracy).fold(f64::INFINITY, f64::min)
    }
}

/// Z-test of ensemble `first` against ensemble `second`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZEntry {
    pub first: String,
    pub second: String,
    pub result: ZTestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub diversity_source: DiversitySource,
    pub ensembles: Vec<EnsembleResult>,
    /// Lower triangle: for `i > j`, ensemble `i` against ensemble `j`.
    pub ztests: Vec<ZEntry>,
    /// Accuracy against mean pairwise kappa; `None` with fewer than two
    /// ensembles or when either series is constant.
    pub correlation_mean: Option<f64>,
    /// Accuracy against the variance of pairwise kappa.
    pub correlation_variance: Option<f64>,
}

/// Everything an experiment produces, for persistence and checks.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EnsembleReport,
    pub legend: ClassLegend,
    pub test_set: SampleSet,
    /// Image pixel of each test sample, when samples are pixels.
    pub test_pixels: Option<Vec<usize>>,
    /// Per ensemble: member predictions on the test set, then the fused ones.
    pub test_predictions: Vec<(Vec<Vec<ClassId>>, Vec<ClassId>)>,
    /// Per ensemble: base maps and fused map (when an image is available).
    pub maps: Vec<Option<(Vec<ClassificationMap>, ClassificationMap)>>,
    pub configs: Vec<EnsembleConfig>,
    pub rankings: Vec<Option<SubsetRanking>>,
}

fn classify_image(model: &MulticlassSvm, image: &MultibandImage, legend: &ClassLegend) -> efs_core::Result<ClassificationMap> {
    let mut px = vec![0.0; image.bands()];
    let labels = (0..image.n_pixels())
        .map(|p| {
            image.pixel_into(p, &mut px);
            model.predict(&px)
        })
        .collect::<efs_core::Result<Vec<_>>>()?;
    ClassificationMap::new(image.width(), image.height(), labels, legend.clone())
}

fn score(predicted: &[ClassId], reference: &[ClassId], k: usize) -> efs_core::Result<(f64, f64)> {
    let cm = confusion_matrix(predicted, reference, k)?;
    Ok((overall_accuracy(&cm), kappa(&cm)))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let data = load_dataset(cfg)?;
    run_on_dataset(cfg, &data)
}

pub fn run_on_dataset(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentOutcome> {
    let n_bands = data.samples.n_bands();
    cfg.validate(n_bands)?;
    let k_classes = data.legend.len();
    let diversity_source = match (cfg.diversity, &data.image) {
        (Some(DiversitySource::Map), None) => {
            return Err(Error::Config("map diversity needs an image".into()));
        }
        (Some(d), _) => d,
        (None, Some(_)) => DiversitySource::Map,
        (None, None) => DiversitySource::Test,
    };

    let (train_idx, test_idx) = split_indices(&data.samples, cfg.train_fraction, cfg.seed).stage("split", "samples")?;
    let train = data.samples.select(&train_idx);
    let test = data.samples.select(&test_idx);
    let stats = estimate_class_statistics(&train, &data.legend).stage("statistics", "training samples")?;

    let search = SearchOptions {
        separability: cfg.separability,
        max_bands: cfg.max_bands,
    };
    let ids = ensemble_ids(&cfg.plan);
    let mut configs = Vec::with_capacity(cfg.plan.len());
    let mut rankings = Vec::with_capacity(cfg.plan.len());
    for (entry, id) in cfg.plan.iter().zip(&ids) {
        match entry.index {
            Some(index) => {
                let ranking = rank_subsets(&stats, entry.k, index, &search).stage("rank", id.as_str())?;
                configs.push(compose_ensemble(&ranking, cfg.members, id).stage("compose", id.as_str())?);
                rankings.push(Some(ranking));
            }
            None => {
                configs.push(compose_unranked(n_bands, entry.k, cfg.members, id, &search).stage("compose", id.as_str())?);
                rankings.push(None);
            }
        }
    }

    // each distinct subset is trained and applied once
    let mut owner: BTreeMap<BandSubset, &str> = BTreeMap::new();
    for c in &configs {
        for s in &c.members {
            owner.entry(s.clone()).or_insert(&c.ensemble_id);
        }
    }
    let subsets: Vec<(BandSubset, &str)> = owner.into_iter().collect();
    struct Applied {
        converged: bool,
        test: Vec<ClassId>,
        map: Option<ClassificationMap>,
    }
    let applied: Vec<Applied> = subsets
        .par_iter()
        .map(|(s, id)| {
            let ctx = || format!("{id}, bands {}", s.one_based("|"));
            let model = train_multiclass(&train, &data.legend, s, &cfg.svm).stage("train", ctx())?;
            let test_pred = model.predict_set(&test).stage("classify", ctx())?;
            let map = data
                .image
                .as_ref()
                .map(|img| classify_image(&model, img, &data.legend))
                .transpose()
                .stage("classify", ctx())?;
            Ok(Applied {
                converged: model.all_converged(),
                test: test_pred,
                map,
            })
        })
        .collect::<Result<_>>()?;
    let lookup: BTreeMap<&BandSubset, &Applied> = subsets.iter().map(|(s, _)| s).zip(&applied).collect();

    let mut ensembles = Vec::with_capacity(configs.len());
    let mut test_predictions = Vec::with_capacity(configs.len());
    let mut maps = Vec::with_capacity(configs.len());
    for c in &configs {
        let id = c.ensemble_id.as_str();
        let members: Vec<&Applied> = c.members.iter().map(|s| lookup[s]).collect();
        let mut bases = Vec::with_capacity(members.len());
        for (s, a) in c.members.iter().zip(&members) {
            let (accuracy, kappa) = score(&a.test, test.labels(), k_classes).stage("evaluate", id)?;
            bases.push(BaseResult {
                bands: s.clone(),
                accuracy,
                kappa,
                converged: a.converged,
            });
        }
        let voters: Vec<&[ClassId]> = members.iter().map(|a| a.test.as_slice()).collect();
        let fused_test = fuse_labels(&voters, k_classes).stage("fuse", id)?;
        let (accuracy, kappa) = score(&fused_test, test.labels(), k_classes).stage("evaluate", id)?;

        let ens_maps = match &data.image {
            Some(_) => {
                let base: Vec<ClassificationMap> = members.iter().map(|a| a.map.clone().expect("image was classified")).collect();
                let fused = fuse_maps(&base).stage("fuse", id)?;
                Some((base, fused))
            }
            None => None,
        };
        let diversity = if members.len() < 2 {
            None
        } else {
            Some(match (diversity_source, &ens_maps) {
                (DiversitySource::Map, Some((base, _))) => diversity_summary(base).stage("diversity", id)?,
                _ => label_diversity(&voters, k_classes).stage("diversity", id)?,
            })
        };
        ensembles.push(EnsembleResult {
            id: c.ensemble_id.clone(),
            index: c.index,
            k: c.k,
            bases,
            accuracy,
            kappa,
            diversity,
        });
        test_predictions.push((members.iter().map(|a| a.test.clone()).collect(), fused_test));
        maps.push(ens_maps);
    }

    let n_test = test.len() as u64;
    let mut ztests = Vec::new();
    for i in 1..ensembles.len() {
        for j in 0..i {
            let result = z_test(ensembles[i].accuracy, n_test, ensembles[j].accuracy, n_test)
                .stage("z-test", format!("{} vs {}", ensembles[i].id, ensembles[j].id))?;
            ztests.push(ZEntry {
                first: ensembles[i].id.clone(),
                second: ensembles[j].id.clone(),
                result,
            });
        }
    }
    let (correlation_mean, correlation_variance) = correlations(&ensembles);

    Ok(ExperimentOutcome {
        report: EnsembleReport {
            seed: cfg.seed,
            n_train: train.len(),
            n_test: test.len(),
            diversity_source,
            ensembles,
            ztests,
            correlation_mean,
            correlation_variance,
        },
        legend: data.legend.clone(),
        test_set: test,
        test_pixels: data.samples_are_pixels.then_some(test_idx),
        test_predictions,
        maps,
        configs,
        rankings,
    })
}

/// Pearson correlation of accuracy with diversity mean and variance over
/// ensembles that have a diversity summary.
pub fn correlations(ensembles: &[EnsembleResult]) -> (Option<f64>, Option<f64>) {
    let with: Vec<(&EnsembleResult, &DiversitySummary)> =
        ensembles.iter().filter_map(|e| e.diversity.as_ref().map(|d| (e, d))).collect();
    if with.len() < 2 {
        return (None, None);
    }
    let acc: Vec<f64> = with.iter().map(|(e, _)| e.accuracy).collect();
    let mean: Vec<f64> = with.iter().map(|(_, d)| d.mean).collect();
    let var: Vec<f64> = with.iter().map(|(_, d)| d.variance).collect();
    (pearson_correlation(&acc, &mean).ok(), pearson_correlation(&acc, &var).ok())
}
