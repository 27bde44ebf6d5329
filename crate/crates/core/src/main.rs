//! `uuncert`: property verification, theta-grid curve sweeps, and the
//! high-dimensional limit experiment, from the command line.
//!
//! Exit codes: 0 success, 1 property failure, 2 argument error, 3 I/O error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use unitary_uncertainty::limit::{convergence_study, ConvergenceStudy};
use unitary_uncertainty::sweep::{format_float, run_sweep, OutputFormat, SweepConfig};
use unitary_uncertainty::verify::{run_verification, VerifyConfig};
use unitary_uncertainty::Error;

const EXIT_OK: i32 = 0;
const EXIT_PROPERTY_FAILURE: i32 = 1;
const EXIT_ARGUMENT_ERROR: i32 = 2;
const EXIT_IO_ERROR: i32 = 3;

#[derive(Parser)]
#[command(
    name = "uuncert",
    about = "Variance-based uncertainty equalities and bounds for unitary operators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized certification suite over seeded instances.
    Verify {
        /// Hilbert-space dimensions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        /// Random instances per dimension.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Override the equality tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate equalities and bounds on the clock/shift pair over a
    /// theta grid and emit the curve table.
    Sweep {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Grid points over the inclusive range [0, pi/2].
        #[arg(long, default_value_t = 201)]
        theta_steps: usize,
        /// Hierarchical subset size; repeat for more columns.
        /// Defaults to every size up to dim - 1.
        #[arg(long = "n")]
        n_values: Vec<usize>,
        /// Sign convention: best, plus, or minus.
        #[arg(long, default_value = "best")]
        sign: String,
        /// Output format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare unitary quantities against their scaled Hermitian
    /// counterparts over a list of dimensions.
    Limit {
        /// Dimensions for the convergence study, comma separated.
        /// Even values sit on the logarithm branch cut and are skipped.
        #[arg(long, value_delimiter = ',', default_value = "9,19,29,39,49,59,69,79,89,99")]
        dims: Vec<usize>,
        /// Output format: csv or json.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Output file for the records; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ARGUMENT_ERROR,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify {
            dims,
            trials,
            seed,
            tol,
        } => cmd_verify(dims, trials, seed, tol),
        Command::Sweep {
            dim,
            theta_steps,
            n_values,
            sign,
            format,
            output,
        } => cmd_sweep(dim, theta_steps, n_values, &sign, &format, output),
        Command::Limit {
            dims,
            format,
            output,
        } => cmd_limit(dims, &format, output),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO_ERROR,
        Error::InvalidArgument(_) | Error::InvalidDimension(_) => EXIT_ARGUMENT_ERROR,
        _ => EXIT_PROPERTY_FAILURE,
    }
}

fn cmd_verify(
    dims: Vec<usize>,
    trials: usize,
    seed: u64,
    tol: Option<f64>,
) -> Result<i32, Error> {
    let mut cfg = VerifyConfig::new(dims, trials, seed);
    if let Some(t) = tol {
        cfg.eq_tol = t;
    }
    let summary = run_verification(&cfg)?;
    print!("{}", summary.render());
    Ok(if summary.all_passed() {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILURE
    })
}

fn cmd_sweep(
    dim: usize,
    theta_steps: usize,
    n_values: Vec<usize>,
    sign: &str,
    format: &str,
    output: Option<PathBuf>,
) -> Result<i32, Error> {
    let n_values = if n_values.is_empty() {
        (1..dim.max(2)).collect()
    } else {
        n_values
    };
    let config = SweepConfig {
        dim,
        theta_steps,
        n_values,
        sign_policy: sign.parse()?,
        output_path: output
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        format: format.parse()?,
    };
    let table = run_sweep(&config)?;
    match output {
        Some(path) => {
            let file = File::create(path)?;
            table.write(BufWriter::new(file), config.format)?;
        }
        None => {
            let stdout = std::io::stdout();
            table.write(stdout.lock(), config.format)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_limit(dims: Vec<usize>, format: &str, output: Option<PathBuf>) -> Result<i32, Error> {
    let format: OutputFormat = format.parse()?;
    let study = convergence_study(&dims)?;
    if study.records.is_empty() {
        eprintln!(
            "error: every requested dimension was skipped (branch cut): {:?}",
            study.skipped
        );
        return Ok(EXIT_PROPERTY_FAILURE);
    }
    match output {
        Some(path) => {
            let file = File::create(path)?;
            write_study(&study, BufWriter::new(file), format)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_study(&study, stdout.lock(), format)?;
        }
    }
    print_decay_summary(&study);
    Ok(EXIT_OK)
}

fn write_study<W: Write>(
    study: &ConvergenceStudy,
    mut w: W,
    format: OutputFormat,
) -> Result<(), Error> {
    match format {
        OutputFormat::Csv => {
            writeln!(w, "dim,quantity,lhs_unitary,lhs_scaled_hermitian,relative_error")?;
            for r in &study.records {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.dim,
                    r.quantity,
                    format_float(r.lhs_unitary),
                    format_float(r.lhs_scaled_hermitian),
                    format_float(r.relative_error),
                )?;
            }
        }
        OutputFormat::Json => {
            writeln!(w, "{{")?;
            writeln!(w, "  \"records\": [")?;
            for (i, r) in study.records.iter().enumerate() {
                write!(
                    w,
                    "    {{\"dim\": {}, \"quantity\": \"{}\", \"lhs_unitary\": {}, \
                     \"lhs_scaled_hermitian\": {}, \"relative_error\": {}}}",
                    r.dim,
                    r.quantity,
                    format_float(r.lhs_unitary),
                    format_float(r.lhs_scaled_hermitian),
                    format_float(r.relative_error),
                )?;
                writeln!(w, "{}", if i + 1 < study.records.len() { "," } else { "" })?;
            }
            writeln!(w, "  ],")?;
            let skipped: Vec<String> = study.skipped.iter().map(|d| d.to_string()).collect();
            writeln!(w, "  \"skipped\": [{}]", skipped.join(", "))?;
            writeln!(w, "}}")?;
        }
    }
    Ok(())
}

/// Per-quantity decay report: relative error at the smallest and largest
/// dimensions and whether the decay is monotone throughout.
fn print_decay_summary(study: &ConvergenceStudy) {
    if !study.skipped.is_empty() {
        eprintln!("skipped even dimensions on the branch cut: {:?}", study.skipped);
    }
    let quantities: Vec<String> = {
        let mut seen = Vec::new();
        for r in &study.records {
            let q = r.quantity.to_string();
            if !seen.contains(&q) {
                seen.push(q);
            }
        }
        seen
    };
    for q in quantities {
        let errs: Vec<(usize, f64)> = study
            .records
            .iter()
            .filter(|r| r.quantity.to_string() == q)
            .map(|r| (r.dim, r.relative_error))
            .collect();
        let monotone = errs.windows(2).all(|w| w[1].1 <= w[0].1);
        let (d0, e0) = errs[0];
        let (d1, e1) = errs[errs.len() - 1];
        println!(
            "{q}: relative error {:.3e} (d={d0}) -> {:.3e} (d={d1}), {}",
            e0,
            e1,
            if monotone {
                "monotone decay"
            } else {
                "not monotone"
            }
        );
    }
}
