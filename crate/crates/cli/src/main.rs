use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batchprop::hamiltonian::Quadrature;
use batchprop::linalg::Precision;
use batchprop::{Error, Mode, Result};
use batchprop_cli::bench::{self, BenchOptions};
use batchprop_cli::converge::{self, ConvergeOptions, DrivenQubit};
use batchprop_cli::propagate::{self, PropagateOptions};
use batchprop_cli::{exit_code, table1, EXIT_OK};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "batchprop", version, about = "Batched propagators for time-dependent Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the system described by a JSON manifest.
    Propagate {
        manifest: PathBuf,
        #[arg(long)]
        magnus: bool,
        #[arg(long)]
        quadrature: Option<Quadrature>,
        #[arg(long)]
        precision: Option<Precision>,
        #[arg(long)]
        mmax: Option<usize>,
        /// Also write the cumulative propagator after every slice.
        #[arg(long)]
        all: bool,
        /// JSON output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error against the closed-form driven-qubit propagator over a sweep of sample counts.
    Converge {
        /// Comma-separated sample counts; log-spaced 10..10⁶ by default.
        #[arg(long, value_delimiter = ',')]
        steps_list: Option<Vec<usize>>,
        #[arg(long)]
        magnus: bool,
        #[arg(long)]
        quadrature: Option<Quadrature>,
        #[arg(long, default_value = "fp64")]
        precision: Precision,
        #[arg(long)]
        phase_align: bool,
        #[arg(long, default_value_t = 1.0)]
        omega0: f64,
        #[arg(long, default_value_t = 0.1)]
        omega1: f64,
        #[arg(long, default_value_t = 1.0)]
        omega_rf: f64,
        #[arg(long, default_value_t = 6.0)]
        time: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time propagation of random systems.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
        steps: Vec<usize>,
        #[arg(long, default_value = "fp64")]
        precision: Precision,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest exponent norm each truncation order supports.
    Table1 {
        /// Single precision row; both rows when omitted.
        #[arg(long)]
        precision: Option<Precision>,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|source| Error::Io {
            context: p.display().to_string(),
            source,
        })?),
        None => Box::new(io::stdout()),
    })
}

fn io_err(context: &str) -> impl Fn(io::Error) -> Error + '_ {
    move |source| Error::Io {
        context: context.to_string(),
        source,
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io {
        context: "csv output".into(),
        source: e.into(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Propagate { manifest, magnus, quadrature, precision, mmax, all, out } => {
            let result = propagate::run_propagate(&PropagateOptions {
                manifest,
                magnus,
                quadrature,
                precision,
                m_max: mmax,
                all,
            })?;
            eprintln!("{}", propagate::summary(&result));
            let text = serde_json::to_string_pretty(&propagate::to_json(&result))
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(sink(out.as_deref())?, "{text}").map_err(io_err("propagator output"))
        }
        Command::Converge {
            steps_list,
            magnus,
            quadrature,
            precision,
            phase_align,
            omega0,
            omega1,
            omega_rf,
            time,
            out,
        } => {
            let qubit = DrivenQubit { omega0, omega1, omega_rf, total_time: time };
            let diff = converge::validate_oracle(&qubit)?;
            eprintln!("oracle check: closed form vs {}-step reference differs by {diff:.2e}", converge::ORACLE_CHECK_STEPS);
            let quadrature = quadrature.unwrap_or(if magnus { Quadrature::Simpson } else { Quadrature::Midpoint });
            let opts = ConvergeOptions {
                qubit,
                mode: Mode { magnus, quadrature },
                precision,
                phase_align,
            };
            let pts = steps_list.unwrap_or_else(|| converge::log_spaced(10, 1_000_000, 4));
            let points = converge::run_converge(&opts, &pts)?;
            converge::write_csv(sink(out.as_deref())?, &points)?;
            match converge::fit_slope(&points) {
                Some(fit) => eprintln!(
                    "slope {:.3} over pts {}..{} ({:.1} decades)",
                    fit.slope, fit.first, fit.last, fit.decades
                ),
                None => eprintln!("slope: fewer than three decreasing points"),
            }
            Ok(())
        }
        Command::Bench { dims, steps, precision, repeats, seed, out } => {
            let rows = bench::run_bench(&BenchOptions {
                dims,
                steps,
                precision,
                repeats,
                seed,
                ..Default::default()
            })?;
            bench::write_csv(sink(out.as_deref())?, &rows).map_err(csv_err)
        }
        Command::Table1 { precision, out } => {
            let precisions = match precision {
                Some(p) => vec![p],
                None => vec![Precision::Fp32, Precision::Fp64],
            };
            print!("{}", table1::render(&precisions));
            if let Some(path) = out {
                table1::write_csv(sink(Some(&path))?, &precisions).map_err(csv_err)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code().as_str());
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
