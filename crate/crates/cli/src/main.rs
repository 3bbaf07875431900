use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use maxeig_cli::commands::{self, Leads, Quantity, Scope, VerifyTarget};
use maxeig_cli::{CliError, CliResult};

/// Exact largest-eigenvalue and conductance distributions for integer-beta ensembles.
#[derive(Parser)]
#[command(name = "maxeig", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the coefficient table for (n, a, beta) and write it as JSON.
    Coeffs {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        a: u32,
        #[arg(long)]
        beta: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a distribution on a grid and write `x,value` CSV.
    Eval {
        /// Table file from `coeffs`; not needed for conductance.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        n1: Option<u32>,
        #[arg(long)]
        n2: Option<u32>,
        #[arg(long)]
        beta: Option<u32>,
        /// `lo:hi:steps` with `steps` equal intervals.
        #[arg(long)]
        grid: String,
        /// Significant decimal digits.
        #[arg(long, default_value_t = 30)]
        precision: u32,
        /// Output path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exact identity suite and/or Monte Carlo KS checks; prints a JSON report.
    Verify {
        #[arg(value_enum)]
        scope: VerifyScope,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        a: Option<u32>,
        #[arg(long)]
        beta: Option<u32>,
        #[arg(long)]
        n1: Option<u32>,
        #[arg(long)]
        n2: Option<u32>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Pdf,
    Cdf,
    FtPdf,
    FtCdf,
    Conductance,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyScope {
    Exact,
    Mc,
    All,
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
            {
                // a closed reader (`| head`) is not an error
                Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                }),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<bool> {
    match cli.command {
        Command::Coeffs { n, a, beta, out } => {
            let summary = commands::coeffs(n, a, beta)?;
            summary.file.write(&out)?;
            emit(
                &format!("{}wrote {}\n", summary.report, out.display()),
                None,
            )?;
            Ok(true)
        }
        Command::Eval {
            table,
            what,
            n1,
            n2,
            beta,
            grid,
            precision,
            out,
        } => {
            let what = match what {
                What::Pdf => Quantity::Pdf,
                What::Cdf => Quantity::Cdf,
                What::FtPdf => Quantity::FtPdf,
                What::FtCdf => Quantity::FtCdf,
                What::Conductance => Quantity::Conductance,
            };
            let table = match (&table, what) {
                (_, Quantity::Conductance) => None,
                (Some(path), _) => Some(commands::load_table(path)?),
                (None, _) => {
                    return Err(CliError::Usage(
                        "--table is required for this quantity".into(),
                    ))
                }
            };
            let grid = commands::parse_grid(&grid)?;
            let csv = commands::eval(
                table.as_ref(),
                what,
                Leads { n1, n2, beta },
                &grid,
                precision,
            )?;
            emit(&csv, out.as_deref())?;
            Ok(true)
        }
        Command::Verify {
            scope,
            n,
            a,
            beta,
            n1,
            n2,
            samples,
            seed,
            out,
        } => {
            let scope = match scope {
                VerifyScope::Exact => Scope::Exact,
                VerifyScope::Mc => Scope::Mc,
                VerifyScope::All => Scope::All,
            };
            let target = VerifyTarget { n, a, beta, n1, n2 };
            let report = commands::verify(scope, target, samples, seed)?;
            emit(&(report.to_json() + "\n"), out.as_deref())?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
