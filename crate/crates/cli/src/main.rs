//! `agrnn` command-line tool.
//!
//! Exit codes: 0 success, 2 bad input or usage, 3 numerical failure, 4 I/O error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agrnn::baselines::{self, FeatureSubset, ReliefParams};
use agrnn::benchmark::{self, BenchmarkConfig, EvaluatorKind, Method, ReportFormat};
use agrnn::datagen::{self, ButterflySpec, FriedmanSpec, DEFAULT_WEIGHT_SEED};
use agrnn::{io as data_io, DataSource, Dataset, Error, InitSigma, OptimizerConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "agrnn", version, about = "Feature selection with anisotropic GRNN bandwidths")]
struct Cli {
    /// Seed for every random choice (data generation, restarts, splits).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr; repeat for more detail.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit bandwidths and report the selected features as JSON.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        optim: OptimArgs,
        #[arg(long, default_value_t = agrnn::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shuffle one feature and compare refitted bandwidths with a baseline.
    Importance {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        optim: OptimArgs,
        /// Feature to shuffle.
        #[arg(long)]
        feature: String,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[arg(long, default_value_t = agrnn::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset to CSV.
    Simulate {
        generator: Generator,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score features with a reference method.
    Baseline {
        method: BaselineMethod,
        #[command(flatten)]
        data: DataArgs,
        /// Keep the k best-scoring features (ftest, mi).
        #[arg(long)]
        k: Option<usize>,
        /// Nearest neighbors for rrelieff.
        #[arg(long, default_value_t = 10)]
        neighbors: usize,
        /// Reference instances for rrelieff; all rows by default.
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, default_value_t = baselines::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare selection methods by held-out error of a simple regressor.
    Benchmark {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        optim: OptimArgs,
        /// Comma-separated subset of as, ftest, mi, cfs, rrelieff.
        #[arg(long, default_value = "as,ftest,mi,cfs,rrelieff")]
        methods: String,
        /// knn or grnn-isotropic.
        #[arg(long, default_value = "knn")]
        evaluator: String,
        #[arg(long, default_value_t = 0.8)]
        train_fraction: f64,
        #[arg(long, default_value_t = 5)]
        cv_folds: usize,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[arg(long, default_value_t = agrnn::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        neighbors: usize,
        #[arg(long, default_value_t = baselines::DEFAULT_BINS)]
        bins: usize,
        /// Report MSE on the raw rather than the scaled target.
        #[arg(long)]
        raw_target: bool,
        /// Dataset label in the report; defaults to the file stem or generator.
        #[arg(long)]
        name: Option<String>,
        /// Add wall-clock timings (makes the output irreproducible).
        #[arg(long)]
        timings: bool,
        /// text, json or csv.
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Butterfly,
    Friedman,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Ftest,
    Mi,
    Cfs,
    Rrelieff,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Butterfly network weights.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_SEED)]
    weight_seed: u64,
    /// Friedman width.
    #[arg(long, default_value_t = 30)]
    d: usize,
    /// Friedman noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    noise_sd: f64,
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV with a header row.
    input: Option<PathBuf>,
    #[arg(long, default_value = "Y")]
    target: String,
    /// Generate the data instead of reading a file.
    #[arg(long, conflicts_with = "input")]
    generate: Option<Generator>,
    #[command(flatten)]
    gen: GenArgs,
}

#[derive(Args)]
struct OptimArgs {
    #[arg(long, default_value_t = 10)]
    memory: usize,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    rel_loss_tol: f64,
    /// One starting bandwidth, or a comma-separated vector.
    #[arg(long, default_value = "0.5")]
    init_sigma: String,
    /// Cap on one optimizer step in log-bandwidth units.
    #[arg(long, default_value_t = agrnn::optimizer::DEFAULT_MAX_STEP)]
    max_step: f64,
    #[arg(long, default_value_t = 0)]
    restarts: usize,
}

impl OptimArgs {
    fn config(&self, seed: u64) -> Result<OptimizerConfig, Error> {
        let parts = self
            .init_sigma
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad --init-sigma entry '{s}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let init_sigma = match parts.as_slice() {
            [s] => InitSigma::Scalar(*s),
            _ => InitSigma::Vector(parts),
        };
        let cfg = OptimizerConfig {
            memory: self.memory,
            max_iterations: self.max_iter,
            grad_tol: self.grad_tol,
            rel_loss_tol: self.rel_loss_tol,
            init_sigma,
            max_step: self.max_step,
            restarts: self.restarts,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn generate(generator: Generator, args: &GenArgs, seed: u64) -> Result<Dataset, Error> {
    match generator {
        Generator::Butterfly => datagen::gen_butterfly(&ButterflySpec {
            weight_seed: args.weight_seed,
            ..ButterflySpec::new(args.n, seed)
        }),
        Generator::Friedman => datagen::gen_friedman(&FriedmanSpec {
            d: args.d,
            noise_sd: args.noise_sd,
            ..FriedmanSpec::new(args.n, seed)
        }),
    }
}

fn generator_name(generator: Generator) -> &'static str {
    match generator {
        Generator::Butterfly => "butterfly",
        Generator::Friedman => "friedman",
    }
}

impl DataArgs {
    fn label(&self) -> String {
        match (&self.input, self.generate) {
            (Some(p), _) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
            (None, Some(g)) => generator_name(g).into(),
            (None, None) => "friedman".into(),
        }
    }

    /// Reads the input file, or generates data; `fallback` is used when neither is given.
    fn load(&self, seed: u64, fallback: Option<Generator>) -> Result<Dataset, Error> {
        if let Some(path) = &self.input {
            let loaded = data_io::load_csv(path, &self.target)?;
            if loaded.dropped_rows > 0 {
                log::warn!("dropped {} unusable rows from {}", loaded.dropped_rows, path.display());
            }
            return Ok(loaded.dataset);
        }
        match self.generate.or(fallback) {
            Some(g) => generate(g, &self.gen, seed),
            None => Err(Error::Input("give an input CSV or --generate".into())),
        }
    }
}

#[derive(Serialize)]
struct BaselineOutput {
    method: String,
    feature_names: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    merit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<FeatureSubset>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Error> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    match out {
        Some(path) => fs::write(path, text).map_err(io_err(path)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn run(cli: Cli) -> Result<(), Error> {
    let seed = cli.seed;
    match cli.command {
        Command::Select {
            data,
            optim,
            threshold,
            out,
        } => {
            let ds = data.load(seed, None)?;
            let result = agrnn::select(&ds, &optim.config(seed)?, threshold)?;
            for w in &result.warnings {
                log::warn!("{w}");
            }
            write_output(out.as_deref(), &to_json(&result)?)
        }
        Command::Importance {
            data,
            optim,
            feature,
            repeats,
            threshold,
            out,
        } => {
            let config = optim.config(seed)?;
            let report = match (&data.input, data.generate) {
                (None, Some(g)) => {
                    let make = |s: u64| generate(g, &data.gen, s);
                    agrnn::shuffle_importance(
                        DataSource::Generated(&make),
                        &feature,
                        &config,
                        threshold,
                        repeats,
                        seed,
                    )?
                }
                _ => {
                    let ds = data.load(seed, None)?;
                    agrnn::shuffle_importance(
                        DataSource::Fixed(&ds),
                        &feature,
                        &config,
                        threshold,
                        repeats,
                        seed,
                    )?
                }
            };
            write_output(out.as_deref(), &to_json(&report)?)
        }
        Command::Simulate {
            generator,
            gen,
            out,
        } => {
            let ds = generate(generator, &gen, seed)?;
            data_io::save_csv(&ds, "Y", &out)
        }
        Command::Baseline {
            method,
            data,
            k,
            neighbors,
            sample_size,
            bins,
            out,
        } => {
            let ds = data.load(seed, None)?;
            let names = ds.feature_names().to_vec();
            let scored = |scores: baselines::ScoreVector,
                          selected: Option<FeatureSubset>| BaselineOutput {
                method: scores.method.to_string(),
                feature_names: names.clone(),
                scores: Some(scores.scores),
                merit: None,
                selected,
                warnings: scores.warnings,
            };
            let output = match method {
                BaselineMethod::Ftest | BaselineMethod::Mi => {
                    let scores = if matches!(method, BaselineMethod::Ftest) {
                        baselines::ftest_scores(&ds)?
                    } else {
                        baselines::mi_scores(&ds, bins)?
                    };
                    let selected = k.map(|k| baselines::top_k(&scores, k)).transpose()?;
                    scored(scores, selected)
                }
                BaselineMethod::Rrelieff => {
                    let params = ReliefParams {
                        k_neighbors: neighbors,
                        sample_size,
                        seed,
                    };
                    let scores = baselines::rrelieff_scores(&ds, &params)?;
                    let selected = match k {
                        Some(k) => baselines::top_k(&scores, k)?,
                        None => baselines::positive_scores(&scores),
                    };
                    scored(scores, Some(selected))
                }
                BaselineMethod::Cfs => {
                    let r = baselines::cfs_select(&ds)?;
                    BaselineOutput {
                        method: "cfs".into(),
                        feature_names: names,
                        scores: None,
                        merit: Some(r.merit),
                        selected: Some(r.selected),
                        warnings: r.warnings,
                    }
                }
            };
            write_output(out.as_deref(), &to_json(&output)?)
        }
        Command::Benchmark {
            data,
            optim,
            methods,
            evaluator,
            train_fraction,
            cv_folds,
            repeats,
            threshold,
            neighbors,
            bins,
            raw_target,
            name,
            timings,
            format,
            out,
        } => {
            let format: ReportFormat = format.parse()?;
            let methods = methods
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse::<Method>)
                .collect::<Result<Vec<_>, _>>()?;
            let evaluator: EvaluatorKind = evaluator.parse()?;
            let ds = data.load(seed, Some(Generator::Friedman))?;
            let config = BenchmarkConfig {
                methods,
                evaluator,
                train_fraction,
                cv_folds,
                repeats,
                seed,
                target_column: data.target.clone(),
                scale_target: !raw_target,
                optimizer: optim.config(seed)?,
                threshold,
                relief: ReliefParams {
                    k_neighbors: neighbors,
                    sample_size: None,
                    seed,
                },
                mi_bins: bins,
                dataset_name: name.unwrap_or_else(|| data.label()),
                record_timings: timings,
            };
            let report = benchmark::run_benchmark(&ds, &config)?;
            write_output(out.as_deref(), &benchmark::emit_report(&report, format)?)
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidData(_) | Error::Input(_) | Error::Json(_) => 2,
        Error::Numerical { .. } => 3,
        Error::Io { .. } => 4,
        Error::Csv(e) if e.is_io_error() => 4,
        Error::Csv(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
