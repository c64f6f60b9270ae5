//! Command-line interface: fetch datasets, train/predict/evaluate models,
//! and reproduce the cross-validation benchmark tables.

use clap::{Args, Parser, Subcommand};
use metric_svm::bench::{emit_report, run_cv_experiment, ExperimentConfig};
use metric_svm::data::{
    cache_dir, load_dataset, resolve_dataset, DataFormat, Dataset, Registry,
};
use metric_svm::kernel::{KernelBank, KernelKind, KernelSpec};
use metric_svm::mkl::{train_mkl, MklParams};
use metric_svm::models::{
    distance_report, train_fda, train_svm_family, train_svm_fda, ModelKind, TrainedModel,
};
use metric_svm::qp::SvmMParams;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "metric-svm",
    version,
    about = "Metric-learning-based SVM and MKL classifiers",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download a registered dataset into the local cache.
    Fetch {
        /// Registered dataset name (e.g. sonar, wdbc, liver).
        name: String,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        /// Machine-readable output.
        #[arg(long)]
        json: bool,
    },
    /// Train a classifier and write the model file.
    Train(TrainArgs),
    /// Predict labels for a dataset with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a trained model: error percentage and distance diagnostics.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Trade-off weight for the cost diagnostics.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        json: bool,
    },
    /// Re-run a benchmark preset and emit report files.
    Reproduce {
        /// Benchmark preset: table1 (single-kernel) or table2 (MKL bank).
        #[arg(long)]
        preset: String,
        /// Comma-separated dataset names; defaults to the full registry.
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for report files.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Input format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Zero-based label column (default: last column).
    #[arg(long)]
    label_col: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Sparse,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Sparse => DataFormat::SparseIndexValue,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Algorithm to train.
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Kernel as kind[:param], e.g. linear, poly:3, gaussian:0.5.
    /// Repeat to define the basis bank for the MKL algorithms
    /// (default bank: 10 polynomials + 10 Gaussians).
    #[arg(long)]
    kernel: Vec<String>,
    /// Margin-slack penalty C (or C1).
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Band-slack penalty; defaults to C1/3.
    #[arg(long)]
    c2: Option<f64>,
    /// Band width multiple of the margin (svm-m / mkl-m).
    #[arg(long, default_value_t = 3.0)]
    epsilon: f64,
    /// Scatter-regularization weight (svm-fda).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Disable cosine kernel normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Use exp(-|x-z|^2 / sigma^2) instead of the default
    /// exp(-|x-z|^2 / (2 sigma^2)) for Gaussian kernels.
    #[arg(long)]
    rbf_convention_nohalf: bool,
    /// Standardize features (fit on this data, embedded in the model).
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, clap::ValueEnum)]
enum AlgoArg {
    Svm,
    SvmM,
    EpsSvm,
    SvmFda,
    Fda,
    MklM,
    EpsMkl,
    MklGamma,
}

impl From<AlgoArg> for ModelKind {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Svm => ModelKind::Svm,
            AlgoArg::SvmM => ModelKind::SvmM,
            AlgoArg::EpsSvm => ModelKind::EpsSvm,
            AlgoArg::SvmFda => ModelKind::SvmFda,
            AlgoArg::Fda => ModelKind::Fda,
            AlgoArg::MklM => ModelKind::MklM,
            AlgoArg::EpsMkl => ModelKind::EpsMkl,
            AlgoArg::MklGamma => ModelKind::MklGamma,
        }
    }
}

/// Parses `kind[:param]` kernel syntax.
fn parse_kernel(text: &str, normalized: bool, nohalf: bool) -> Result<KernelSpec, String> {
    let (kind, param) = match text.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (text, None),
    };
    let spec = match kind {
        "linear" => {
            if param.is_some() {
                return Err("linear kernel takes no parameter".into());
            }
            KernelSpec::linear()
        }
        "poly" | "polynomial" => {
            let degree: u32 = param
                .ok_or("poly kernel needs a degree, e.g. poly:3")?
                .parse()
                .map_err(|e| format!("bad poly degree: {e}"))?;
            KernelSpec::polynomial(degree)
        }
        "gaussian" | "rbf" => {
            let sigma: f64 = param
                .ok_or("gaussian kernel needs a width, e.g. gaussian:1.0")?
                .parse()
                .map_err(|e| format!("bad gaussian sigma: {e}"))?;
            if nohalf {
                KernelSpec {
                    kind: KernelKind::GaussianNoHalf { sigma },
                    normalized: true,
                }
            } else {
                KernelSpec::gaussian(sigma)
            }
        }
        other => return Err(format!("unknown kernel kind '{other}'")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec.with_normalized(normalized))
}

fn exit_for(err: &metric_svm::Error) -> u8 {
    use metric_svm::Error::*;
    match err {
        Solver(_) => EXIT_SOLVER,
        Config(_) | Kernel(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn fail(err: metric_svm::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_for(&err))
}

fn usage_fail(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn load(path: &PathBuf, input: &InputArgs) -> metric_svm::Result<Dataset> {
    load_dataset(path, input.format.into(), input.label_col, &[])
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; everything else is a
            // usage error (exit 1, not clap's default 2).
            use clap::error::ErrorKind;
            let ok = matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    match cli.command {
        Command::Fetch { name, cache_dir: cd, json } => cmd_fetch(&name, cd, json),
        Command::Train(args) => cmd_train(args),
        Command::Predict { model, data, out, input, json } => {
            cmd_predict(&model, &data, &out, &input, json)
        }
        Command::Eval { model, data, lambda, input, json } => {
            cmd_eval(&model, &data, lambda, &input, json)
        }
        Command::Reproduce { preset, datasets, seed, out, cache_dir: cd, json } => {
            cmd_reproduce(&preset, datasets, seed, &out, cd, json)
        }
    }
}

fn cmd_fetch(name: &str, cache: Option<PathBuf>, json: bool) -> ExitCode {
    let dir = cache_dir(cache.as_deref());
    let registry = Registry::built_in();
    match resolve_dataset(name, &dir, &registry) {
        Ok(ds) => {
            if json {
                println!(
                    "{}",
                    serde_json::json!({
                        "dataset": name,
                        "instances": ds.n(),
                        "features": ds.dim(),
                        "cache": dir,
                    })
                );
            } else {
                println!(
                    "{name}: {} instances, {} features (cache: {})",
                    ds.n(),
                    ds.dim(),
                    dir.display()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn cmd_train(args: TrainArgs) -> ExitCode {
    let kind: ModelKind = args.algo.into();
    let data = match load(&args.data, &args.input) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let (data, standardizer) = if args.standardize {
        let s = metric_svm::data::fit_standardizer(&data);
        match metric_svm::data::apply_standardizer(&s, &data) {
            Ok(d) => (d, Some(s)),
            Err(e) => return fail(e),
        }
    } else {
        (data, None)
    };
    let normalized = !args.no_normalize;
    let kernels: Vec<KernelSpec> = if args.kernel.is_empty() {
        Vec::new()
    } else {
        let mut specs = Vec::new();
        for text in &args.kernel {
            match parse_kernel(text, normalized, args.rbf_convention_nohalf) {
                Ok(s) => specs.push(s),
                Err(msg) => return usage_fail(&msg),
            }
        }
        specs
    };
    let c2 = args.c2.unwrap_or(args.c1 / 3.0);
    let params = SvmMParams::new(args.c1, c2, args.epsilon);

    let is_mkl = matches!(kind, ModelKind::MklM | ModelKind::EpsMkl | ModelKind::MklGamma);
    let result = if is_mkl {
        let specs = if kernels.is_empty() {
            KernelBank::default20_specs(normalized)
        } else {
            kernels
        };
        KernelBank::build(specs, &data)
            .and_then(|bank| train_mkl(&data, &bank, &MklParams::new(params), kind))
    } else {
        match kind {
            ModelKind::Fda => train_fda(&data),
            ModelKind::SvmFda => train_svm_fda(&data, &params, args.lambda),
            _ => {
                let spec = match kernels.as_slice() {
                    [] => KernelSpec::linear().with_normalized(normalized),
                    [one] => *one,
                    _ => return usage_fail("single-kernel algorithms take one --kernel"),
                };
                train_svm_family(&data, &spec, &params, kind)
            }
        }
    };
    let mut model = match result {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    model.standardizer = standardizer;
    if let Err(e) = model.save(&args.out) {
        return fail(e);
    }
    if args.json {
        let diag = model.diagnostics.as_ref();
        println!(
            "{}",
            serde_json::json!({
                "model": args.out,
                "algorithm": metric_svm::bench::algo_label(kind),
                "support_vectors": model.support.len(),
                "objective": diag.map(|d| d.objective),
                "kkt_residual": diag.map(|d| d.kkt_residual),
            })
        );
    } else {
        println!(
            "trained {} ({} support vectors) -> {}",
            metric_svm::bench::algo_label(kind),
            model.support.len(),
            args.out.display()
        );
    }
    ExitCode::SUCCESS
}

fn cmd_predict(
    model_path: &PathBuf,
    data_path: &PathBuf,
    out: &PathBuf,
    input: &InputArgs,
    json: bool,
) -> ExitCode {
    let model = match TrainedModel::load(model_path) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let data = match load(data_path, input) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let mut lines = String::from("prediction\n");
    for i in 0..data.n() {
        let x: Vec<f64> = data.features.row(i).iter().copied().collect();
        match model.predict(&x) {
            Ok(p) => lines.push_str(&format!("{}\n", p as i64)),
            Err(e) => return fail(e),
        }
    }
    if let Err(e) = std::fs::write(out, lines) {
        return fail(e.into());
    }
    if json {
        println!(
            "{}",
            serde_json::json!({"predictions": out, "instances": data.n()})
        );
    } else {
        println!("wrote {} predictions -> {}", data.n(), out.display());
    }
    ExitCode::SUCCESS
}

fn cmd_eval(
    model_path: &PathBuf,
    data_path: &PathBuf,
    lambda: f64,
    input: &InputArgs,
    json: bool,
) -> ExitCode {
    let model = match TrainedModel::load(model_path) {
        Ok(m) => m,
        Err(e) => return fail(e),
    };
    let data = match load(data_path, input) {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let mut wrong = 0usize;
    for i in 0..data.n() {
        let x: Vec<f64> = data.features.row(i).iter().copied().collect();
        match model.predict(&x) {
            Ok(p) => {
                if p != data.labels[i] {
                    wrong += 1;
                }
            }
            Err(e) => return fail(e),
        }
    }
    let error_percent = 100.0 * wrong as f64 / data.n() as f64;
    // Diagnostics are computed in the model's working space: standardize
    // with the embedded transform when present.
    let diag_data = match &model.standardizer {
        Some(s) => match metric_svm::data::apply_standardizer(s, &data) {
            Ok(d) => d,
            Err(e) => return fail(e),
        },
        None => data.clone(),
    };
    let diag_model = TrainedModel {
        standardizer: None,
        ..model.clone()
    };
    let report = match distance_report(&diag_model, &diag_data, lambda) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if json {
        println!(
            "{}",
            serde_json::json!({"error_percent": error_percent, "distances": report})
        );
    } else {
        println!("error: {error_percent:.2}%");
        println!("margin gamma: {:.6}", report.margin);
        println!("between-class d_B: {:.6}", report.d_b);
        println!(
            "within-class d_W1 (pos, neg): {:.6}, {:.6}",
            report.d_w1_per_class.0, report.d_w1_per_class.1
        );
        println!(
            "within-class d_W2 (pos, neg): {:.6}, {:.6}",
            report.d_w2_per_class.0, report.d_w2_per_class.1
        );
        match report.d_w3 {
            Some(v) => println!("within-class d_W3 (w'S_W w): {v:.6}"),
            None => println!("within-class d_W3: n/a (non-linear kernel)"),
        }
        println!(
            "costs F1..F4 (lambda={lambda}): {:.6}, {:.6}, {:.6}, {:.6}",
            report.f1, report.f2, report.f3, report.f4
        );
    }
    ExitCode::SUCCESS
}

fn cmd_reproduce(
    preset: &str,
    datasets: Vec<String>,
    seed: u64,
    out: &PathBuf,
    cache: Option<PathBuf>,
    json: bool,
) -> ExitCode {
    let registry = Registry::built_in();
    let names = if datasets.is_empty() {
        registry.names()
    } else {
        datasets
    };
    let config = match preset {
        "table1" => ExperimentConfig::table1(names.clone(), seed),
        "table2" => ExperimentConfig::table2(names.clone(), seed),
        other => return usage_fail(&format!("unknown preset '{other}' (use table1 or table2)")),
    };
    let dir = cache_dir(cache.as_deref());
    let mut sets = Vec::with_capacity(names.len());
    for name in &names {
        match resolve_dataset(name, &dir, &registry) {
            Ok(d) => sets.push(d),
            Err(e) => return fail(e),
        }
    }
    let report = match run_cv_experiment(&config, &sets) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if let Err(e) = emit_report(&report, out) {
        return fail(e);
    }
    if json {
        println!(
            "{}",
            serde_json::json!({"report_dir": out, "cells": report.cells.len()})
        );
    } else {
        println!(
            "wrote {} cells -> {}",
            report.cells.len(),
            out.join("report.csv").display()
        );
    }
    ExitCode::SUCCESS
}
