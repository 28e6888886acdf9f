//! Command-line entry point: dataset generation, training, evaluation,
//! and the benchmark sweeps, all reproducible from a config file and a
//! root seed.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numeric
//! failure.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use weavefreq::config::RunConfig;
use weavefreq::error::Error;
use weavefreq::experiments::{
    accuracy_loss, architecture_comparison, emit_plot_script, export_results, length_sweep,
    noise_sweep, Estimator, SweepResult,
};
use weavefreq::mmae::run_mmae;
use weavefreq::nn::{
    build_architecture, load_model, save_model, Architecture, OptimizerMeta,
};
use weavefreq::signal::{
    generate_dataset, load_dataset_csv, save_dataset_csv, split_dataset, LabeledDataset,
    SignalParams,
};
use weavefreq::train::{accuracy_of, save_train_log_csv, train, TrainConfig};

#[derive(Parser)]
#[command(
    name = "weavefreq",
    version,
    about = "Classify the frequency of a noisy sine-wave trajectory: Kalman filter bank vs. neural networks"
)]
struct Cli {
    /// JSON run configuration; flags below override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Candidate frequency set: omega1, omega2, omega3, or custom.
    #[arg(long, global = true)]
    set: Option<String>,

    /// Measurement-noise standard deviation in meters.
    #[arg(long, global = true)]
    sigma: Option<f64>,

    /// Signal length in seconds.
    #[arg(long, global = true)]
    duration: Option<f64>,

    /// Network architecture: DNN, DNN2, CNN, or CNN2.
    #[arg(long, global = true)]
    arch: Option<String>,

    /// Root seed for all generation, splits, and training.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Reduced protocol: 300 signals per class instead of 3000.
    #[arg(long, global = true)]
    fast: bool,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    /// Output directory (datasets/, models/, results/ inside).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset CSV.
    GenData,
    /// Train an architecture on a generated (or provided) dataset.
    Train {
        /// Train on this dataset CSV instead of generating one.
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Report an estimator's accuracy on a dataset CSV.
    Eval {
        /// Model JSON path, or the literal `mmae`.
        model: String,
        /// Dataset CSV.
        data: PathBuf,
    },
    /// Run a benchmark sweep and write its results CSV + plot script.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    /// Accuracy vs noise level (DNN and MMAE).
    Noise,
    /// Accuracy vs signal length (DNN and MMAE).
    Length,
    /// Accuracy vs noise level for all four architectures.
    Arch,
    /// Accuracy loss of the configured set relative to the baseline set.
    Loss,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Config(_) => 2,
                Error::Param(_) | Error::Shape(_) | Error::Io { .. } | Error::Parse { .. } => 3,
                Error::Numeric(_) | Error::Diverged { .. } => 4,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(set) = &cli.set {
        config.set = set.clone();
    }
    if let Some(sigma) = cli.sigma {
        config.sigma = sigma;
    }
    if let Some(duration) = cli.duration {
        config.duration = duration;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    if cli.fast {
        config.per_class = 300;
    }
    config.validate()?;

    if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    match &cli.command {
        Command::GenData => cmd_gen_data(&config, cli.force),
        Command::Train { data } => cmd_train(&config, cli.arch.as_deref(), data.as_deref(), cli.force),
        Command::Eval { model, data } => cmd_eval(&config, model, data),
        Command::Sweep { kind } => cmd_sweep(&config, *kind, cli.force),
    }
}

/// Fails unless the file is absent or `force` was given.
fn ensure_writable(path: &Path, force: bool) -> Result<(), Error> {
    if path.exists() && !force {
        return Err(Error::Param(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn base_params(config: &RunConfig) -> SignalParams {
    SignalParams {
        amplitude: config.amplitude,
        frequency: 1.0, // replaced per class
        phase: 0.0,
        noise_std: config.sigma,
        duration: config.duration,
        dt: config.dt,
        seed: 0,
    }
}

fn cmd_gen_data(config: &RunConfig, force: bool) -> Result<(), Error> {
    let set = config.frequency_set()?;
    let ds = generate_dataset(&set, config.per_class, &base_params(config), config.seed)?;
    let dir = config.out_dir.join("datasets");
    prepare_dir(&dir)?;
    let path = dir.join(format!(
        "{}_sigma{}_T{}_{}.csv",
        set.name,
        config.sigma,
        config.duration,
        config.fingerprint()
    ));
    ensure_writable(&path, force)?;
    save_dataset_csv(&ds, &path)?;
    println!(
        "wrote {} ({} signals, {} per class, sigma={})",
        path.display(),
        ds.len(),
        config.per_class,
        config.sigma
    );
    Ok(())
}

fn parse_arch(name: Option<&str>) -> Result<Architecture, Error> {
    let name = name.ok_or_else(|| {
        Error::Config("--arch is required; valid names: DNN, DNN2, CNN, CNN2".to_string())
    })?;
    Architecture::parse(name).map_err(|e| Error::Config(e.to_string()))
}

fn cmd_train(
    config: &RunConfig,
    arch_name: Option<&str>,
    data: Option<&Path>,
    force: bool,
) -> Result<(), Error> {
    let arch = parse_arch(arch_name)?;
    let set = config.frequency_set()?;

    let train_set = match data {
        Some(path) => load_dataset_csv(path)?,
        None => {
            let ds = generate_dataset(&set, config.per_class, &base_params(config), config.seed)?;
            let protocol = config.protocol();
            let (train_set, _) = split_dataset(
                &ds,
                protocol.train_count(ds.len()),
                weavefreq::rng::derive_seed(config.seed, 1, 0),
            )?;
            train_set
        }
    };

    let spec = build_architecture(arch, train_set.input_length(), train_set.set.len())?;
    let mut train_config = TrainConfig::for_architecture(arch, config.seed);
    if let Some(epochs) = config.epochs {
        train_config.epochs = epochs;
    }
    train_config.batch_size = config.batch_size;
    if let Some(lr) = config.learning_rate {
        train_config.learning_rate = lr;
    }

    let model = train(&spec, &train_set, &train_config)?;

    let dir = config.out_dir.join("models");
    prepare_dir(&dir)?;
    let stem = format!("{}_{}_{}", arch.name(), set.name, config.fingerprint());
    let model_path = dir.join(format!("{stem}.json"));
    let log_path = dir.join(format!("{stem}_log.csv"));
    ensure_writable(&model_path, force)?;
    ensure_writable(&log_path, force)?;

    let meta = OptimizerMeta {
        kind: train_config.optimizer,
        learning_rate: train_config.learning_rate,
        epochs: train_config.epochs,
        batch_size: train_config.batch_size,
        shuffle_seed: train_config.shuffle_seed,
    };
    save_model(&model_path, &model.spec, &model.params, model.init_seed, &meta)?;
    save_train_log_csv(&model.train_log, &log_path)?;

    let last = model.train_log.last().expect("at least one epoch");
    println!("wrote {}", model_path.display());
    println!("wrote {}", log_path.display());
    println!(
        "final epoch: loss={:.6} train_accuracy={:.4}",
        last.mean_loss, last.train_accuracy
    );
    Ok(())
}

fn cmd_eval(config: &RunConfig, model: &str, data: &Path) -> Result<(), Error> {
    let ds: LabeledDataset = load_dataset_csv(data)?;
    if model == "mmae" {
        let mmae_config = config.mmae_config();
        let mut correct = 0usize;
        for (signal, &label) in ds.signals.iter().zip(&ds.labels) {
            let run = run_mmae(signal, &ds.set, &mmae_config)?;
            if run.class == label {
                correct += 1;
            }
            if ds.len() == 1 {
                println!("class: {} (true {label})", run.class);
                println!("step,{}", (0..ds.set.len()).map(|i| format!("p_{i}")).collect::<Vec<_>>().join(","));
                for (k, probs) in run.probability_history.iter().enumerate() {
                    let cols: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
                    println!("{k},{}", cols.join(","));
                }
                println!(
                    "fused frequency: {:.4} Hz",
                    run.fused_frequency_history.last().unwrap() / TAU
                );
            }
        }
        println!(
            "estimator=MMAE n_test={} accuracy={:.4}",
            ds.len(),
            correct as f64 / ds.len() as f64
        );
    } else {
        let (spec, params, _, _) = load_model(Path::new(model))?;
        let accuracy = accuracy_of(&spec, &params, &ds)?;
        println!("estimator={} n_test={} accuracy={accuracy:.4}", spec.name, ds.len());
    }
    Ok(())
}

fn write_sweep_outputs(
    config: &RunConfig,
    result: &SweepResult,
    stem: &str,
    force: bool,
) -> Result<(), Error> {
    let dir = config.out_dir.join("results");
    prepare_dir(&dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let py_path = dir.join(format!("{stem}.py"));
    ensure_writable(&csv_path, force)?;
    ensure_writable(&py_path, force)?;
    export_results(result, &csv_path)?;
    emit_plot_script(result, &format!("{stem}.csv"), &py_path)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", py_path.display());
    for row in &result.rows {
        println!(
            "{}={} {} accuracy={:.4}",
            result.condition_name, row.condition, row.estimator, row.accuracy
        );
    }
    Ok(())
}

fn cmd_sweep(config: &RunConfig, kind: SweepKind, force: bool) -> Result<(), Error> {
    let set = config.frequency_set()?;
    let protocol = config.protocol();
    let dnn_and_mmae = [Estimator::Network(Architecture::Dnn), Estimator::Mmae];
    let fp = config.fingerprint();

    match kind {
        SweepKind::Noise => {
            let result = noise_sweep(&set, &config.sigma_grid, &dnn_and_mmae, &protocol)?;
            write_sweep_outputs(config, &result, &format!("noise_{}_{fp}", set.name), force)
        }
        SweepKind::Length => {
            let result = length_sweep(
                &set,
                &config.duration_grid,
                config.sigma,
                &dnn_and_mmae,
                &protocol,
            )?;
            write_sweep_outputs(config, &result, &format!("length_{}_{fp}", set.name), force)
        }
        SweepKind::Arch => {
            let result = architecture_comparison(&set, &config.sigma_grid, &protocol)?;
            write_sweep_outputs(config, &result, &format!("arch_{}_{fp}", set.name), force)
        }
        SweepKind::Loss => {
            let baseline = config.named_set(&config.loss_baseline)?;
            if baseline.name == set.name {
                return Err(Error::Config(
                    "loss sweep needs two different sets; change --set or loss_baseline"
                        .to_string(),
                ));
            }
            let a = noise_sweep(&set, &config.sigma_grid, &dnn_and_mmae, &protocol)?;
            let b = noise_sweep(&baseline, &config.sigma_grid, &dnn_and_mmae, &protocol)?;
            let result = accuracy_loss(&a, &b)?;
            write_sweep_outputs(
                config,
                &result,
                &format!("loss_{}_minus_{}_{fp}", set.name, baseline.name),
                force,
            )
        }
    }
}
