use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghz_holism::config::{Config, OutputFormat};
use ghz_holism::holism::{
    check_strict_holism, entropy_estimate, FamilySource, HolismOptions, PropertySpec, SubfamilyMode,
};
use ghz_holism::measurement::{
    bernoulli_test, sample_joint_x, subset_product_series, MeasurementRecord, TRIAL_SEMANTICS,
};
use ghz_holism::pauli::PauliString;
use ghz_holism::probspace::{parse_constraints, AtomDistribution, MomentConstraint, MomentSolver, RangeOutcome};
use ghz_holism::state::{ghz_expectation, Engine};
use ghz_holism::verify::{verify_all, verify_single};
use serde_json::json;

#[derive(Parser)]
#[command(name = "holism-lab", version, about = "GHZ correlations, exact moment problems and strict holism")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the matching config field.
#[derive(Args)]
struct CommonArgs {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    dense_cap: Option<usize>,
    #[arg(long, global = true)]
    solver_cap: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Dense,
    ClosedForm,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum PropertyArg {
    EntropyZero,
    EntropyOne,
    ExpectationOne,
}

#[derive(Subcommand)]
enum Command {
    /// Expectation of a Pauli string on the n-qubit GHZ state.
    Expect {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        string: String,
        #[arg(long, value_enum, default_value = "both")]
        engine: EngineArg,
    },
    /// Sample joint X measurements and write the CSV record.
    Sample {
        #[arg(long)]
        n: usize,
    },
    /// Frequency and runs tests on the product over a subset of a record.
    BernoulliTest {
        #[arg(long)]
        record: PathBuf,
        #[arg(long, value_delimiter = ',')]
        subset: Vec<usize>,
    },
    /// Entropy of the product over a subset, from a record or the analytic GHZ distribution.
    Entropy {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
    },
    /// Decide whether moment constraints pin down a unique joint distribution.
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        constraints: PathBuf,
    },
    /// Exact range of a subset expectation under moment constraints.
    Range {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        constraints: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        subset: Vec<usize>,
    },
    /// Check strict holism of a family for a chosen property.
    Holism {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_enum, default_value = "entropy-zero")]
        property: PropertyArg,
        /// Tolerance for "has the property" (entropy-one only).
        #[arg(long, default_value_t = 0.0)]
        tolerance: f64,
        /// Check this many random subfamilies instead of all of them.
        #[arg(long)]
        sample_subfamilies: Option<usize>,
        #[arg(long)]
        exclude_singletons: bool,
    },
    /// Run the verification suite, or a single proposition with --prop.
    Verify {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=6))]
        prop: Option<u8>,
        #[arg(long, requires = "prop")]
        n: Option<usize>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Analytic GHZ family of this size.
    #[arg(long)]
    n: Option<usize>,
    /// Empirical family from a CSV record.
    #[arg(long)]
    record: Option<PathBuf>,
}

/// Failure of a subcommand: `Usage` exits 2, `Failed` exits 1.
enum Failure {
    Usage(String),
    Failed,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Failed) => ExitCode::from(1),
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_config(flags: &CommonArgs) -> Result<Config, Failure> {
    let mut config = Config::from_env()?;
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(trials) = flags.trials {
        config.trials = trials;
    }
    if let Some(alpha) = flags.alpha {
        config.alpha = alpha;
    }
    if let Some(epsilon) = flags.epsilon {
        config.epsilon = epsilon;
    }
    if let Some(cap) = flags.dense_cap {
        config.dense_cap = cap;
    }
    if let Some(cap) = flags.solver_cap {
        config.solver_cap = cap;
    }
    if let Some(format) = flags.format {
        config.format = match format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
    }
    config.validate()?;
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| Failure::Usage(format!("--out {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("report types serialize")
}

fn read_record(path: &Path) -> Result<MeasurementRecord, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("--record {}: {e}", path.display())))?;
    MeasurementRecord::read_csv(file).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_constraints(path: &Path) -> Result<Vec<MomentConstraint>, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("--constraints {}: {e}", path.display())))?;
    parse_constraints(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn family_source(args: &SourceArgs) -> Result<FamilySource, Failure> {
    match (&args.record, args.n) {
        (Some(path), _) => Ok(FamilySource::Empirical(read_record(path)?)),
        (None, Some(n)) => Ok(FamilySource::Analytic(AtomDistribution::ghz_x(n)?)),
        (None, None) => Err(Failure::Usage("one of --n or --record is required".into())),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = load_config(&cli.common)?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Expect { n, string, engine } => {
            let p: PauliString = string.parse().map_err(|e| Failure::Usage(format!("--string: {e}")))?;
            let engine = match engine {
                EngineArg::Dense => Engine::Dense,
                EngineArg::ClosedForm => Engine::ClosedForm,
                EngineArg::Both => Engine::Both,
            };
            let result = ghz_expectation(n, &p, engine, config.dense_cap)?;
            emit(out, &to_json(&result))
        }
        Command::Sample { n } => {
            let record = sample_joint_x(n, config.trials, config.seed)?;
            let metadata = json!({
                "n": n,
                "trials": config.trials,
                "seed": config.seed,
                "semantics": TRIAL_SEMANTICS,
                "out": out.map(|p| p.display().to_string()),
            });
            match out {
                Some(path) => {
                    let file =
                        File::create(path).map_err(|e| Failure::Usage(format!("--out {}: {e}", path.display())))?;
                    let mut writer = BufWriter::new(file);
                    record.write_csv(&mut writer)?;
                    writer.flush()?;
                    println!("{metadata}");
                }
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    record.write_csv(&mut lock)?;
                    eprintln!("{metadata}");
                }
            }
            Ok(())
        }
        Command::BernoulliTest { record, subset } => {
            let record = read_record(&record)?;
            let subset = if subset.is_empty() { (1..=record.n()).collect() } else { subset };
            let series = subset_product_series(&record, &subset)?;
            let mut report = bernoulli_test(&series, config.alpha)?;
            report.subset = Some(subset);
            emit(out, &to_json(&report))
        }
        Command::Entropy { source, subset } => {
            let source = family_source(&source)?;
            let estimate = entropy_estimate(&source, &subset)?;
            emit(out, &to_json(&estimate))
        }
        Command::Solve { n, constraints } => {
            let constraints = read_constraints(&constraints)?;
            let outcome = MomentSolver::new(config.solver_cap).solve(n, &constraints)?;
            emit(out, &to_json(&outcome))
        }
        Command::Range { n, constraints, subset } => {
            let constraints = read_constraints(&constraints)?;
            match MomentSolver::new(config.solver_cap).range(n, &constraints, &subset)? {
                RangeOutcome::Range(interval) => emit(out, &to_json(&interval)),
                RangeOutcome::Infeasible => emit(out, &to_json(&json!({ "outcome": "infeasible" }))),
            }
        }
        Command::Holism { source, property, tolerance, sample_subfamilies, exclude_singletons } => {
            let source = family_source(&source)?;
            let eps = config.epsilon;
            let property = match property {
                PropertyArg::EntropyZero => PropertySpec::product_entropy_zero(eps),
                PropertyArg::EntropyOne => PropertySpec::product_entropy_one(tolerance, eps),
                PropertyArg::ExpectationOne => PropertySpec::product_expectation_magnitude_one(eps),
            }?;
            let mode = match sample_subfamilies {
                Some(count) => SubfamilyMode::Sampled { count, seed: config.seed },
                None => SubfamilyMode::Exhaustive,
            };
            let options = HolismOptions { include_singletons: !exclude_singletons, mode, ..HolismOptions::default() };
            let report = check_strict_holism(&source, &property, &options)?;
            emit(out, &to_json(&report))
        }
        Command::Verify { prop, n } => {
            let report = match prop {
                Some(prop) => verify_single(prop, n, &config)?,
                None => verify_all(&config),
            };
            let text = match config.format {
                OutputFormat::Json => to_json(&report),
                OutputFormat::Csv => {
                    let mut lines = vec!["check,passed".to_string()];
                    lines.extend(report.statuses().into_iter().map(|(name, ok)| format!("{name},{ok}")));
                    lines.push(format!("all,{}", report.all_passed));
                    lines.join("\n")
                }
            };
            emit(out, &text)?;
            if report.all_passed {
                Ok(())
            } else {
                Err(Failure::Failed)
            }
        }
    }
}
