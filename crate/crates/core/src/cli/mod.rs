//! Command-line front end: `analyze`, `sweep` and `reproduce`.
//!
//! Exit codes: 0 success (whatever the verdicts), 1 a reproduction criterion
//! failed, 2 config or input error, 3 numerical failure.

pub mod analyze;
pub mod config;
pub mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use analyze::{run_analysis, run_sweep, sweep_csv, BoundarySummary, OperationFailure, Report, SweepRow};
pub use config::{AnalysisConfig, Operation};
pub use reproduce::{run_reproduce, CriterionOutcome, ReproduceOptions, ReproduceReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CRITERION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "carleson", version, about = "Laplace-Carleson embedding and admissibility checks")]
pub struct Cli {
    /// JSON analysis config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Quadrature tolerance, overriding the config.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the operations selected in the config and write a JSON report.
    Analyze,
    /// Verdict grid over `grids.p x grids.alpha`, written as CSV plus a boundary summary.
    Sweep,
    /// Run the reproduction suite and print one line per criterion.
    Reproduce {
        #[arg(long, default_value_t = 10_000)]
        heat_modes: usize,
        #[arg(long, default_value_t = 60)]
        parabolic_modes: usize,
        /// Test hook: use a deliberately wrong criterion exponent.
        #[arg(long, hide = true)]
        inject_wrong_beta: bool,
    },
}

/// `q / p (1 - alpha / (p - 1))`: the exponent with `p` in place of `p'`.
fn wrong_beta(p: f64, q: f64, alpha: f64) -> f64 {
    q / p * (1.0 - alpha / (p - 1.0))
}

fn load_config(cli: &Cli) -> Result<AnalysisConfig, String> {
    let path = cli.config.as_ref().ok_or("this command needs --config PATH")?;
    let mut config = AnalysisConfig::load(path).map_err(|e| e.to_string())?;
    if let Some(tol) = cli.tol {
        config.tolerances.quadrature = tol;
        config.validate().map_err(|e| e.to_string())?;
    }
    Ok(config)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn analyze(cli: &Cli) -> i32 {
    let config = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run_analysis(&config) {
        Ok(report) => {
            for v in &report.verdicts {
                println!("{}: {} ({})", v.operation.name(), v.classification, v.detail);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match write(&cli.out, &config.output.report, &to_json(&report)) {
                Ok(path) => {
                    println!("report written to {}", path.display());
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                }
            }
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    }
}

fn sweep(cli: &Cli) -> i32 {
    let config = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let output = match run_sweep(&config) {
        Ok(o) => o,
        Err(failure) => {
            eprintln!("error: {failure}");
            return failure.exit_code();
        }
    };
    let table = match sweep_csv(&output.rows) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let written = write(&cli.out, &config.output.table, &table)
        .and_then(|t| write(&cli.out, &config.output.boundary, &to_json(&output.summary)).map(|b| (t, b)));
    match written {
        Ok((t, b)) => {
            for point in &output.summary.boundary {
                match point.p {
                    Some(p) => println!("alpha = {}: smallest admissible p = {p}", point.alpha),
                    None => println!("alpha = {}: no admissible p on the grid", point.alpha),
                }
            }
            println!("table written to {}, boundary to {}", t.display(), b.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

fn reproduce(cli: &Cli, heat_modes: usize, parabolic_modes: usize, inject_wrong_beta: bool) -> i32 {
    if heat_modes == 0 || parabolic_modes == 0 {
        eprintln!("error: mode counts must be positive");
        return EXIT_CONFIG;
    }
    let options = ReproduceOptions {
        heat_modes,
        parabolic_modes,
        seed: cli.seed,
        exponent: inject_wrong_beta.then_some(wrong_beta as crate::systems::ExponentRule),
    };
    let report = run_reproduce(&options);
    for c in &report.criteria {
        println!("{}", c.line());
    }
    if let Err(e) = write(&cli.out, "reproduce.json", &to_json(&report)) {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    if report.all_passed {
        EXIT_OK
    } else {
        EXIT_CRITERION
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let body = || match cli.command {
        Command::Analyze => analyze(&cli),
        Command::Sweep => sweep(&cli),
        Command::Reproduce {
            heat_modes,
            parabolic_modes,
            inject_wrong_beta,
        } => reproduce(&cli, heat_modes, parabolic_modes, inject_wrong_beta),
    };
    match cli.threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            EXIT_CONFIG
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: thread pool: {e}");
                EXIT_CONFIG
            }
        },
        None => body(),
    }
}
