use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use efs::config::{parse_plan, DiversitySource, ExperimentConfig};
use efs::core::dataset::ClassLegend;
use efs::core::ensemble::fuse_maps;
use efs::core::eval::{confusion_matrix, diversity_summary, kappa, overall_accuracy};
use efs::core::separability::{Aggregation, SeparabilityIndex, SeparabilityOptions};
use efs::core::stats::{estimate_class_statistics, BandSubset};
use efs::core::subset::{rank_subsets, SearchOptions, DEFAULT_MAX_BANDS};
use efs::core::svm::{train_multiclass, SvmParams};
use efs::core::synth::{generate_scene, builtin_scene_spec};
use efs::error::{Error, Result};
use efs::experiment::run_experiment;
use efs::formats::image::{load_image, save_image};
use efs::formats::map::{load_classification_map, save_classification_map};
use efs::formats::model::{load_model, save_model};
use efs::formats::ranking::ranking_to_csv;
use efs::formats::samples::{load_samples, save_samples};
use efs::formats::scene::{load_scene_spec, save_scene_spec};
use efs::report::{emit_report, load_report, summary_text, write_outcome};

#[derive(Parser)]
#[command(name = "efs", version, about = "Ensemble feature selection for multiband land-cover classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene (image, truth map, samples, spec).
    Synth(SynthArgs),
    /// Print per-class means and covariances of a sample set.
    Stats(StatsArgs),
    /// Rank every band subset of one size by a separability index.
    Rank(RankArgs),
    /// Train a one-vs-one RBF SVM on a band subset.
    Train(TrainArgs),
    /// Apply a trained model to an image or a sample set.
    Classify(ClassifyArgs),
    /// Majority-vote several label maps into one.
    Fuse(FuseArgs),
    /// Accuracy, kappa and diversity of label maps against a reference map.
    Evaluate(EvaluateArgs),
    /// Run the full ensemble experiment and write its report.
    Experiment(ExperimentArgs),
    /// Rebuild report files (Z-tests, correlations, summary) from an experiment directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec file; the bundled six-band scene is used when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Seed for the bundled scene.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    samples: PathBuf,
}

#[derive(Args)]
struct SeparabilityArgs {
    /// mean or min over class pairs.
    #[arg(long, default_value = "mean")]
    aggregation: String,
    #[arg(long, default_value_t = efs::core::separability::TD_SCALE)]
    td_scale: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_BANDS)]
    max_bands: usize,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    samples: PathBuf,
    /// bhattacharyya, divergence or transformed_divergence.
    #[arg(long)]
    index: String,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    separability: SeparabilityArgs,
    /// Ranking CSV path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SvmArgs {
    #[arg(long)]
    c: Option<f64>,
    /// Kernel width, or "auto".
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_passes: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    samples: PathBuf,
    /// 1-based bands such as "1|3|6"; all bands when absent.
    #[arg(long)]
    bands: Option<String>,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// Image header to classify into a map.
    #[arg(long, conflicts_with = "samples")]
    image: Option<PathBuf>,
    /// Sample CSV to classify; prints accuracy and writes labels.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Map base path (with --image) or label CSV (with --samples).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Map base paths (without .map.bin).
    #[arg(long = "map", required = true, num_args = 1..)]
    maps: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long = "map", required = true, num_args = 1..)]
    maps: Vec<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// File of `key = value` settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene spec file, or "builtin" for the bundled scene.
    #[arg(long, conflicts_with = "samples")]
    scene: Option<String>,
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, requires = "samples")]
    image: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated index:k entries, e.g. "bhattacharyya:2,none:5".
    #[arg(long)]
    plan: Option<String>,
    /// Base classifiers per ensemble.
    #[arg(long, short = 'm')]
    members: Option<usize>,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    aggregation: Option<String>,
    #[arg(long)]
    td_scale: Option<f64>,
    #[arg(long)]
    max_bands: Option<usize>,
    /// map or test.
    #[arg(long)]
    diversity: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment output directory.
    #[arg(long)]
    dir: PathBuf,
    /// Where to write the rebuilt files; defaults to --dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn svm_params(args: &SvmArgs) -> Result<SvmParams> {
    let mut cfg = ExperimentConfig::default();
    apply_svm(&mut cfg, args)?;
    Ok(cfg.svm)
}

fn apply_svm(cfg: &mut ExperimentConfig, args: &SvmArgs) -> Result<()> {
    let here = Path::new("");
    let pairs = [
        ("c", args.c.map(|v| v.to_string())),
        ("gamma", args.gamma.clone()),
        ("tol", args.tol.map(|v| v.to_string())),
        ("max_passes", args.max_passes.map(|v| v.to_string())),
        ("max_iter", args.max_iter.map(|v| v.to_string())),
    ];
    for (k, v) in pairs {
        if let Some(v) = v {
            cfg.set(k, &v, here)?;
        }
    }
    cfg.svm.validate().map_err(|e| Error::Config(e.to_string()))
}

fn config_err(e: efs::core::Error) -> Error {
    Error::Config(e.to_string())
}

fn data_err(path: &Path, e: efs::core::Error) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.to_path_buf(),
            source: e,
        })?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(p) => load_scene_spec(p)?,
        None => builtin_scene_spec(args.seed),
    };
    let scene = generate_scene(&spec).map_err(config_err)?;
    save_image(&scene.image, &args.out.join("scene"))?;
    save_classification_map(&scene.truth, &args.out.join("truth"))?;
    save_samples(&scene.samples, &scene.legend, &args.out.join("samples.csv"))?;
    save_scene_spec(&spec, &args.out.join("scene.spec"))?;
    println!(
        "wrote {}x{} pixels, {} bands, {} classes to {}",
        spec.width,
        spec.height,
        spec.n_bands,
        scene.legend.len(),
        args.out.display()
    );
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let (samples, legend) = load_samples(&args.samples)?;
    let stats = estimate_class_statistics(&samples, &legend).map_err(|e| data_err(&args.samples, e))?;
    for c in stats.classes() {
        println!("class {} {} (n = {})", c.class_id, legend.name(c.class_id).unwrap_or("?"), c.count);
        println!("  mean {}", join(&c.mean));
        for i in 0..c.covariance.dim() {
            println!("  cov  {}", join(c.covariance.row(i)));
        }
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

fn separability_options(args: &SeparabilityArgs) -> Result<SearchOptions> {
    Ok(SearchOptions {
        separability: SeparabilityOptions {
            aggregation: args.aggregation.parse::<Aggregation>().map_err(config_err)?,
            td_scale: args.td_scale,
        },
        max_bands: args.max_bands,
    })
}

fn rank(args: RankArgs) -> Result<()> {
    let index: SeparabilityIndex = args.index.parse().map_err(config_err)?;
    let options = separability_options(&args.separability)?;
    let (samples, legend) = load_samples(&args.samples)?;
    if args.k == 0 || args.k > samples.n_bands() {
        return Err(Error::Config(format!("k must be in 1..={}", samples.n_bands())));
    }
    let stats = estimate_class_statistics(&samples, &legend).map_err(|e| data_err(&args.samples, e))?;
    let ranking = rank_subsets(&stats, args.k, index, &options).map_err(config_err)?;
    let csv = ranking_to_csv(&ranking);
    match &args.out {
        Some(p) => write_file(p, &csv),
        None => {
            print!("{}", String::from_utf8_lossy(&csv));
            Ok(())
        }
    }
}

fn train(args: TrainArgs) -> Result<()> {
    let params = svm_params(&args.svm)?;
    let (samples, legend) = load_samples(&args.samples)?;
    let subset = match &args.bands {
        Some(b) => BandSubset::parse_one_based(b, samples.n_bands()).map_err(config_err)?,
        None => BandSubset::full(samples.n_bands()),
    };
    let model = train_multiclass(&samples, &legend, &subset, &params).map_err(|e| match e {
        efs::core::Error::NoConvergence { .. } => Error::Stage {
            stage: "train",
            context: format!("bands {}", subset.one_based("|")),
            source: e,
        },
        other => data_err(&args.samples, other),
    })?;
    save_model(&model, &legend, &args.out)?;
    if !model.all_converged() {
        eprintln!("warning: some pairwise machines stopped before meeting the KKT tolerance");
    }
    Ok(())
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let (model, legend) = load_model(&args.model)?;
    if let Some(header) = &args.image {
        let image = load_image(header)?;
        let mut px = vec![0.0; image.bands()];
        let labels = (0..image.n_pixels())
            .map(|p| {
                image.pixel_into(p, &mut px);
                model.predict(&px)
            })
            .collect::<efs::core::Result<Vec<_>>>()
            .map_err(|e| data_err(header, e))?;
        let map = efs::core::dataset::ClassificationMap::new(image.width(), image.height(), labels, legend)
            .map_err(|e| data_err(header, e))?;
        save_classification_map(&map, &args.out)?;
        return Ok(());
    }
    let Some(path) = &args.samples else {
        return Err(Error::Config("classify needs --image or --samples".into()));
    };
    let (samples, sample_legend) = load_samples(path)?;
    let pred = model.predict_set(&samples).map_err(|e| data_err(path, e))?;
    let mut out = String::from("sample,predicted\n");
    let mut correct = 0usize;
    for (i, (p, truth)) in pred.iter().zip(samples.labels()).enumerate() {
        let name = legend.name(*p).unwrap_or("?");
        out.push_str(&format!("{i},{name}\n"));
        if sample_legend.name(*truth) == Some(name) {
            correct += 1;
        }
    }
    write_file(&args.out, out.as_bytes())?;
    println!("accuracy {}", correct as f64 / samples.len() as f64);
    Ok(())
}

fn load_maps(paths: &[PathBuf], grid: &GridArgs) -> Result<Vec<efs::core::dataset::ClassificationMap>> {
    paths
        .iter()
        .map(|p| load_classification_map(p, grid.width, grid.height))
        .collect()
}

fn fuse(args: FuseArgs) -> Result<()> {
    let maps = load_maps(&args.maps, &args.grid)?;
    let fused = fuse_maps(&maps).map_err(config_err)?;
    save_classification_map(&fused, &args.out)?;
    Ok(())
}

fn same_legend(a: &ClassLegend, b: &ClassLegend) -> bool {
    a.names() == b.names()
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let reference = load_classification_map(&args.reference, args.grid.width, args.grid.height)?;
    let maps = load_maps(&args.maps, &args.grid)?;
    let k = reference.legend().len();
    println!("map,accuracy,kappa");
    for (p, m) in args.maps.iter().zip(&maps) {
        if !same_legend(m.legend(), reference.legend()) {
            return Err(Error::Config(format!("{} has a different legend from the reference", p.display())));
        }
        let cm = confusion_matrix(m.labels(), reference.labels(), k).map_err(config_err)?;
        println!("{},{},{}", p.display(), overall_accuracy(&cm), kappa(&cm));
    }
    if maps.len() >= 2 {
        let d = diversity_summary(&maps).map_err(config_err)?;
        println!("diversity mean {} variance {}", d.mean, d.variance);
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(file) = &args.config {
        cfg.apply_file(file)?;
    }
    let here = Path::new("");
    let settings = [
        ("scene", args.scene.clone()),
        ("samples", args.samples.as_ref().map(|p| p.display().to_string())),
        ("image", args.image.as_ref().map(|p| p.display().to_string())),
        ("train_fraction", args.train_fraction.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("members", args.members.map(|v| v.to_string())),
        ("aggregation", args.aggregation.clone()),
        ("td_scale", args.td_scale.map(|v| v.to_string())),
        ("max_bands", args.max_bands.map(|v| v.to_string())),
        ("diversity", args.diversity.clone()),
        ("output", args.output.as_ref().map(|p| p.display().to_string())),
    ];
    for (k, v) in settings {
        if let Some(v) = v {
            cfg.set(k, &v, here)?;
        }
    }
    if let Some(plan) = &args.plan {
        cfg.plan = parse_plan(plan)?;
    }
    apply_svm(&mut cfg, &args.svm)?;
    let outcome = run_experiment(&cfg)?;
    write_outcome(&outcome, &cfg.output)?;
    print!("{}", summary_text(&outcome.report));
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let summary_path = args.dir.join(efs::report::SUMMARY_TXT);
    let summary = std::fs::read_to_string(&summary_path).map_err(|e| Error::Io {
        path: summary_path.clone(),
        source: e,
    })?;
    let field = |key: &str| {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(key))
            .map(str::trim)
            .ok_or_else(|| Error::Format {
                path: summary_path.clone(),
                message: format!("missing {key:?} line"),
            })
    };
    let bad = |what: &str| Error::Format {
        path: summary_path.clone(),
        message: format!("bad {what}"),
    };
    let seed: u64 = field("seed:")?.parse().map_err(|_| bad("seed"))?;
    let n_test: usize = field("test samples:")?.parse().map_err(|_| bad("test sample count"))?;
    let source: DiversitySource = field("diversity source:")?.parse()?;
    let mut rebuilt = load_report(&args.dir, n_test, seed, source)?;
    rebuilt.n_train = field("train samples:")?.parse().map_err(|_| bad("train sample count"))?;
    let out = args.out.unwrap_or(args.dir);
    emit_report(&rebuilt, &out)?;
    print!("{}", summary_text(&rebuilt));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Stats(a) => stats(a),
        Command::Rank(a) => rank(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Fuse(a) => fuse(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
