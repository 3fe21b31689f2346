use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use alchemy::experiments::{preset, run_experiment, ExperimentConfig, ExperimentError, SUMMARY_FILE};
use alchemy::lambda::{parse, reduce_to_normal_form, ReductionLimits, ReductionOutcome};
use alchemy::metrics;

#[derive(Parser)]
#[command(name = "alchemy", version, about = "Lambda-calculus chemistry with amplifier test functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSVs, a manifest and a summary.
    Run(RunArgs),
    /// Print a preset (with any overrides) as a config file.
    Config(RunArgs),
    /// Reduce one expression to normal form.
    Reduce {
        /// File holding the expression, or `-` for stdin.
        input: String,
        #[arg(long, default_value_t = 8000)]
        max_steps: u32,
        #[arg(long, default_value_t = 1000)]
        max_vertices: u32,
    },
    /// Print per-label statistics of a replicate CSV.
    Inspect {
        csv: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        threshold: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Option<String>,
    /// Config file; flags given alongside it override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Multiplies soup size, collisions and replicates.
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u32>,
    #[arg(long)]
    collisions: Option<u64>,
    #[arg(long)]
    soup_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let mut c = ExperimentConfig::from_toml(&text)?;
            if let Some(name) = &args.preset {
                if *name != c.preset {
                    return Err(Failure::Config(format!(
                        "--preset {name} conflicts with preset `{}` in {}",
                        c.preset,
                        path.display()
                    )));
                }
                c.preset = name.clone();
            }
            c
        }
        (None, Some(name)) => preset(name)?,
        (None, None) => return Err(Failure::Config("give --preset or --config".into())),
    };
    if let Some(f) = args.scale {
        config = config.scaled(f)?;
    }
    if let Some(v) = args.seed {
        config.master_seed = v;
    }
    if let Some(v) = args.replicates {
        config.replicates = v;
    }
    if let Some(v) = args.collisions {
        config.total_collisions = v;
    }
    if let Some(v) = args.soup_size {
        config.soup_size = v;
    }
    if let Some(v) = &args.out {
        config.output_dir = v.clone();
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    config.validate()?;
    Ok(config)
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let config = build_config(args)?;
    let report = run_experiment(&config)?;
    println!(
        "{} replicates ({} failed), config {}",
        report.manifest.replicates.len(),
        report.manifest.failed,
        &report.manifest.config_hash[..12]
    );
    println!("summary: {}", report.dir.join(SUMMARY_FILE).display());
    if report.manifest.failed > 0 {
        return Err(Failure::Runtime(format!("{} replicates failed", report.manifest.failed)));
    }
    Ok(())
}

fn reduce(input: &str, max_steps: u32, max_vertices: u32) -> Result<(), Failure> {
    let mut text = String::new();
    if input == "-" {
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    } else {
        text = fs::read_to_string(input).map_err(|e| Failure::Config(format!("{input}: {e}")))?;
    }
    let limits = ReductionLimits::new(max_steps, max_vertices)
        .ok_or_else(|| Failure::Config("limits must be positive".into()))?;
    let expr = parse(text.trim()).map_err(|e| Failure::Config(e.to_string()))?;
    match reduce_to_normal_form(&expr, limits) {
        ReductionOutcome::NormalForm { expr, steps_used } => {
            emit(&format!("{expr}\n"));
            eprintln!("{steps_used} steps, {} vertices", expr.size());
            Ok(())
        }
        ReductionOutcome::StepLimitExceeded => Err(Failure::Runtime(format!("no normal form within {max_steps} steps"))),
        ReductionOutcome::SizeLimitExceeded => {
            Err(Failure::Runtime(format!("term grew past {max_vertices} vertices")))
        }
    }
}

fn inspect(path: &PathBuf, threshold: f64) -> Result<(), Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let (labels, records) = metrics::read_csv(file).map_err(|e| Failure::Config(e.to_string()))?;
    let last = records
        .last()
        .ok_or_else(|| Failure::Config(format!("{} has no records", path.display())))?;
    let mut out = format!(
        "{} records, last at collision {}, soup size {}\n",
        records.len(),
        last.collision_index,
        last.soup_size
    );
    out.push_str("label,final,final_fraction,peak_fraction,time_average,final_over_threshold\n");
    for label in &labels {
        let stat = |r: Result<f64, metrics::MetricsError>| r.map_err(|e| Failure::Config(e.to_string()));
        out.push_str(&format!(
            "{label},{},{},{},{},{}\n",
            last.count(label).unwrap_or(0),
            stat(last.fraction(label))?,
            stat(metrics::peak_fraction(&records, label))?,
            stat(metrics::time_averaged_population(&records, label))?,
            metrics::threshold_fraction(&records, label, threshold).map_err(|e| Failure::Config(e.to_string()))?
        ));
    }
    emit(&out);
    Ok(())
}

/// Writes to stdout, treating a closed pipe (`alchemy config | head`) as done.
fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    if let Err(e) = stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Config(args) => build_config(args).map(|c| emit(&c.to_toml())),
        Command::Reduce { input, max_steps, max_vertices } => reduce(input, *max_steps, *max_vertices),
        Command::Inspect { csv, threshold } => inspect(csv, *threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
