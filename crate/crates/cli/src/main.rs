use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use based_core::bench::{
    self, ingest, read_features_csv, run_benchmark, training_rows, write_features_csv, FeatureRow,
};
use based_core::eval::{kfold_with_plan, CorrelationMode, CvReport, FoldPlan};
use based_core::forest::{self, MaxFeatures, TrainConfig, DEFAULT_SEED, DEFAULT_TREES};
use based_core::imgcore::load_png;
use based_core::subjective::{bt_fit, read_pairs_csv, write_scores_csv, DEFAULT_MAX_ITER, DEFAULT_TOL};
use based_core::{extract_all, FeatureParams};

const EXIT_PARTIAL: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Reduced-reference quality metric for deblurred images.
#[derive(Parser)]
#[command(name = "based", version)]
struct Cli {
    /// Worker threads (default: all logical cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the nine features for every manifest row
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        params: ParamsArg,
    },
    /// Fit a forest on a features CSV with subjective scores
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long, default_value_t = DEFAULT_TREES)]
        trees: usize,
    },
    /// Score one (blurred, deblurred) pair
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        blurred: PathBuf,
        #[arg(long)]
        deblurred: PathBuf,
        #[command(flatten)]
        params: ParamsArg,
    },
    /// k-fold cross-validation, optionally sweeping the tree count
    Crossval {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(2..))]
        folds: u32,
        /// One count or a comma-separated sweep, e.g. 50,100,220
        #[arg(long, value_delimiter = ',', default_value = "220")]
        trees: Vec<usize>,
        #[arg(long, value_enum, default_value_t = GroupBy::CropId)]
        group_by: GroupBy,
        /// Manifest used to map crops to scenes for --group-by scene_id
        #[arg(long, required_if_eq("group_by", "scene_id"))]
        manifest: Option<PathBuf>,
        /// Average correlations per group inside each fold instead of pooling
        #[arg(long)]
        per_group: bool,
        /// Write the report(s) as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        forest: ForestArgs,
    },
    /// Fit Bradley-Terry scores from pairwise tallies
    Btfit {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        max_iter: usize,
    },
    /// Score a manifest and write features.csv, leaderboard.md, correlations.json
    Benchmark {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        params: ParamsArg,
    },
}

#[derive(Args)]
struct ParamsArg {
    /// JSON file overriding feature parameters
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct ForestArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Grow every tree on the full training set
    #[arg(long)]
    no_bootstrap: bool,
    /// Features tried per split (default: all)
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    #[arg(long)]
    max_depth: Option<usize>,
}

impl ForestArgs {
    fn config(&self, trees: usize) -> TrainConfig {
        TrainConfig {
            n_estimators: trees,
            max_features: self.max_features.map_or(MaxFeatures::All, MaxFeatures::Count),
            min_samples_leaf: self.min_samples_leaf,
            max_depth: self.max_depth,
            bootstrap: !self.no_bootstrap,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupBy {
    #[value(name = "crop_id")]
    CropId,
    #[value(name = "scene_id")]
    SceneId,
    None,
}

type Fallible<T> = Result<T, Box<dyn std::error::Error>>;

impl ParamsArg {
    fn load(&self) -> Fallible<FeatureParams> {
        let Some(path) = &self.params else {
            return Ok(FeatureParams::default());
        };
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let p: FeatureParams = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        p.validate()?;
        Ok(p)
    }
}

fn report_failures(failures: &[bench::RowFailure]) -> ExitCode {
    if failures.is_empty() {
        return ExitCode::SUCCESS;
    }
    for f in failures {
        eprintln!("row {} ({}, {}): {}", f.line, f.crop_id, f.method, f.error);
    }
    eprintln!("{} row(s) failed", failures.len());
    ExitCode::from(EXIT_PARTIAL)
}

fn extract(manifest: &Path, out: &Path, params: &ParamsArg) -> Fallible<ExitCode> {
    let params = params.load()?;
    let manifest = ingest(manifest)?;
    let result = run_benchmark(&manifest, None, &params, None)?;
    let rows: Vec<FeatureRow> = result.records.iter().map(FeatureRow::from).collect();
    write_features_csv(out, &rows)?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(report_failures(&result.failures))
}

fn train(features: &Path, out: &Path, config: &TrainConfig) -> Fallible<ExitCode> {
    let rows = training_rows(&read_features_csv(features)?)?;
    info!("training {} trees on {} rows", config.n_estimators, rows.len());
    let model = forest::fit(&rows, config)?;
    forest::save(&model, out)?;
    println!("trained {} trees on {} rows -> {}", model.trees().len(), rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn predict(model: &Path, blurred: &Path, deblurred: &Path, params: &ParamsArg) -> Fallible<ExitCode> {
    let params = params.load()?;
    let model = forest::load(model)?;
    let b = load_png(blurred)?;
    let d = load_png(deblurred)?;
    let fv = extract_all(&b, &d, &params)?;
    println!("{}", model.predict(&fv));
    Ok(ExitCode::SUCCESS)
}

fn group_labels(rows: &[FeatureRow], by: GroupBy, manifest: Option<&Path>) -> Fallible<Option<Vec<String>>> {
    Ok(match by {
        GroupBy::None => None,
        GroupBy::CropId => Some(rows.iter().map(|r| r.crop_id.clone()).collect()),
        GroupBy::SceneId => {
            let path = manifest.ok_or("--group-by scene_id needs --manifest")?;
            let scenes: BTreeMap<String, String> = ingest(path)?.scene_of_crop()?;
            let labels = rows
                .iter()
                .map(|r| {
                    scenes
                        .get(&r.crop_id)
                        .cloned()
                        .ok_or_else(|| format!("crop '{}' is not in {}", r.crop_id, path.display()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Some(labels)
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn crossval(
    features: &Path,
    folds: usize,
    trees: &[usize],
    group_by: GroupBy,
    manifest: Option<&Path>,
    per_group: bool,
    out: Option<&Path>,
    forest_args: &ForestArgs,
) -> Fallible<ExitCode> {
    let table = read_features_csv(features)?;
    let rows = training_rows(&table)?;
    let groups = group_labels(&table, group_by, manifest)?;
    let plan = FoldPlan::new(rows.len(), folds, groups.as_deref(), forest_args.seed)?;
    let mode = match (per_group, &groups) {
        (false, _) => CorrelationMode::Pooled,
        (true, Some(g)) => CorrelationMode::PerGroup(g),
        (true, None) => return Err("--per-group needs a grouping other than none".into()),
    };

    println!("trees\tPLCC\tSRCC\tKRCC");
    let mut reports: Vec<(usize, CvReport)> = Vec::new();
    for &t in trees {
        let report = kfold_with_plan(&rows, &plan, &forest_args.config(t), mode)?;
        println!("{t}\t{:.4}\t{:.4}\t{:.4}", report.plcc, report.srcc, report.krcc);
        reports.push((t, report));
    }
    if let Some(path) = out {
        let json = if let [(_, single)] = reports.as_slice() {
            serde_json::to_value(single)?
        } else {
            serde_json::Value::Array(
                reports
                    .iter()
                    .map(|(t, r)| serde_json::json!({ "trees": t, "report": r }))
                    .collect(),
            )
        };
        fs::write(path, serde_json::to_string_pretty(&json)? + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn btfit(pairs: &Path, out: &Path, tol: f64, max_iter: usize) -> Fallible<ExitCode> {
    let scores = bt_fit(&read_pairs_csv(pairs)?, tol, max_iter)?;
    write_scores_csv(out, &scores)?;
    for (method, s) in scores.ranked() {
        println!("{method}\t{s:.6}");
    }
    Ok(ExitCode::SUCCESS)
}

fn benchmark(manifest: &Path, model: &Path, out_dir: &Path, params: &ParamsArg) -> Fallible<ExitCode> {
    let params = params.load()?;
    let model = forest::load(model)?;
    let manifest = ingest(manifest)?;
    let result = run_benchmark(&manifest, Some(&model), &params, None)?;
    bench::write_outputs(out_dir, &result)?;
    print!("{}", bench::leaderboard_markdown(&result.leaderboard));
    Ok(report_failures(&result.failures))
}

fn run(cli: Cli) -> Fallible<ExitCode> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(n))
            .build_global()?;
    }
    match cli.command {
        Command::Extract { manifest, out, params } => extract(&manifest, &out, &params),
        Command::Train {
            features,
            out,
            forest,
            trees,
        } => train(&features, &out, &forest.config(trees)),
        Command::Predict {
            model,
            blurred,
            deblurred,
            params,
        } => predict(&model, &blurred, &deblurred, &params),
        Command::Crossval {
            features,
            folds,
            trees,
            group_by,
            manifest,
            per_group,
            out,
            forest,
        } => crossval(
            &features,
            folds as usize,
            &trees,
            group_by,
            manifest.as_deref(),
            per_group,
            out.as_deref(),
            &forest,
        ),
        Command::Btfit {
            pairs,
            out,
            tol,
            max_iter,
        } => btfit(&pairs, &out, tol, max_iter),
        Command::Benchmark {
            manifest,
            model,
            out_dir,
            params,
        } => benchmark(&manifest, &model, &out_dir, &params),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BASED_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
