use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rotlab::config::ExperimentConfig;
use rotlab::experiments::{self, Operation, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
use rotlab::output::write_atomic;
use rotlab::reproduce::{self, Settings, CRITERIA, DEFAULT_SEED};

#[derive(Parser, Debug)]
#[command(
    name = "rotlab",
    version,
    about = "Numerical experiments on the irrational rotation algebra"
)]
struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON artifacts.
    #[arg(long, global = true, default_value = "rotlab-out")]
    out: PathBuf,
    /// Seed for randomized checks; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fuglede–Kadison determinant of f(v).
    Fkdet,
    /// Birkhoff products over a grid.
    Birkhoff,
    /// Spectral radius estimates along a schedule of n.
    Radius,
    /// Empirical law of P_n^{2/n}.
    Nu,
    /// Circle or disk spectrum of u f(v).
    Spectrum,
    /// Brown measure of u f(v).
    Brown,
    /// Eigenvalues of the finite weighted-shift model.
    Model,
    /// Smallest singular values of the finite model over a grid.
    Pseudospec,
    /// Harper matrix spectrum or butterfly sweep.
    Harper,
    /// Subfactor index from the Fourier support of |f|^2.
    Index,
    /// Simplicity of C*(u f(v), 1).
    Simplicity,
    /// The subalgebra A and its isomorphism type.
    #[command(name = "algebraA")]
    AlgebraA,
    /// Runs every acceptance criterion.
    ReproduceAll {
        /// Make the named criterion's tolerance unattainable.
        #[arg(long, hide = true)]
        corrupt_tolerance: Option<u32>,
    },
}

impl Command {
    fn operation(&self) -> Option<Operation> {
        Some(match self {
            Command::Fkdet => Operation::Fkdet,
            Command::Birkhoff => Operation::Birkhoff,
            Command::Radius => Operation::Radius,
            Command::Nu => Operation::Nu,
            Command::Spectrum => Operation::Spectrum,
            Command::Brown => Operation::Brown,
            Command::Model => Operation::Model,
            Command::Pseudospec => Operation::Pseudospec,
            Command::Harper => Operation::Harper,
            Command::Index => Operation::Index,
            Command::Simplicity => Operation::Simplicity,
            Command::AlgebraA => Operation::AlgebraA,
            Command::ReproduceAll { .. } => return None,
        })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("rotlab: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("rotlab: {e}");
            return ExitCode::from(EXIT_FAILURE as u8);
        }
    }
    let config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("rotlab: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let code = match (cli.command.operation(), &cli.command) {
        (Some(op), _) => experiments::execute(op, &config, &cli.out),
        (None, Command::ReproduceAll { corrupt_tolerance }) => {
            if corrupt_tolerance.is_some_and(|id| !(1..=CRITERIA).contains(&id)) {
                eprintln!("rotlab: no criterion {}", corrupt_tolerance.unwrap_or(0));
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            reproduce_all(
                &Settings {
                    seed,
                    corrupt: *corrupt_tolerance,
                },
                &cli.out,
            )
        }
        (None, _) => unreachable!("every other command names an operation"),
    };
    ExitCode::from(code as u8)
}

fn reproduce_all(settings: &Settings, out: &std::path::Path) -> i32 {
    let reports = reproduce::reproduce_all(settings);
    for r in &reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        if r.failures.is_empty() {
            println!("{status} {:>2} {}", r.id, r.name);
        } else {
            println!(
                "{status} {:>2} {} [{}]",
                r.id,
                r.name,
                r.failures.join("; ")
            );
        }
    }
    let summary = reproduce::summary_table(&reports);
    let rows = reproduce::rows_table(&reports);
    for t in [&summary, &rows] {
        if let Err(e) = write_atomic(&out.join(format!("{}.csv", t.name)), &t.to_csv()) {
            eprintln!("rotlab: cannot write artifacts: {e}");
            return EXIT_FAILURE;
        }
    }
    if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
