//! Command-line front end.
//!
//! Data goes to stdout (or `--output`), diagnostics to stderr; the exit
//! status is zero exactly when no operation failed. Identical invocations
//! produce byte-identical output.
//!
//! Symbol files are raw octets with values `0..m`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codec;
use crate::constraints::{dirichlet_measure, BackendPreference, ConstraintSet, DirichletParams, IntegrationConfig};
use crate::error::{Error, Result};
use crate::estimator::EstimatorState;
use crate::redundancy::{redundancy_report, ReportColumns, CSV_HEADER};

/// Minimum Monte Carlo sample count accepted when sampling can be reached.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "polykt", version, about = "Constrained KT estimation, compression and redundancy tables")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Constraint configuration file (defaults to the whole simplex).
    #[arg(long, global = true, value_name = "PATH")]
    pub constraints: Option<PathBuf>,
    /// Alphabet size when no constraint file is given.
    #[arg(long, global = true, value_name = "M")]
    pub alphabet: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Relative tolerance of the quadrature backend.
    #[arg(long = "quad-tol", global = true, default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Largest alphabet integrated by quadrature (boxes only).
    #[arg(long = "quadrature-max-m", global = true, default_value_t = 4)]
    pub quadrature_max_m: usize,
    /// Always use the Monte Carlo backend.
    #[arg(long = "monte-carlo", global = true)]
    pub monte_carlo: bool,
    /// Write data here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the predictive distribution after the given counts or sequence.
    Predict {
        /// Symbol counts k_1 … k_m.
        counts: Vec<u64>,
        /// Raw symbol file to read the counts from instead.
        #[arg(long, value_name = "PATH", conflicts_with = "counts")]
        sequence: Option<PathBuf>,
    },
    /// Compress a raw symbol file.
    Compress { input: PathBuf },
    /// Decompress a file written by `compress`.
    Decompress { input: PathBuf },
    /// Emit a CSV redundancy table.
    Redundancy {
        /// Sequence lengths.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        /// Skip the exact worst-case (Shtarkov) column.
        #[arg(long)]
        no_exact_worst: bool,
        /// Fill the exact average-redundancy column.
        #[arg(long)]
        exact_avg: bool,
        /// Fill the mixture worst-case regret column.
        #[arg(long)]
        mixture: bool,
        /// Fill the c_n column.
        #[arg(long)]
        cn: bool,
    },
    /// Print Dir(S; α) with its backend and uncertainty.
    Integrate {
        /// Dirichlet parameters α_1 … α_m.
        #[arg(required = true)]
        alpha: Vec<f64>,
    },
}

impl GlobalArgs {
    fn config(&self) -> IntegrationConfig {
        IntegrationConfig {
            quadrature_max_m: self.quadrature_max_m,
            quad_tol: self.quad_tol,
            samples: self.samples,
            seed: self.seed,
            backend: if self.monte_carlo { BackendPreference::MonteCarlo } else { BackendPreference::Auto },
            ..IntegrationConfig::default()
        }
    }

    /// Loads the constraint set; `inferred_m` is used when neither a file nor
    /// `--alphabet` gives the alphabet size.
    fn constraint_set(&self, inferred_m: Option<usize>) -> Result<ConstraintSet> {
        if let Some(path) = &self.constraints {
            let text = fs::read_to_string(path)?;
            let set: ConstraintSet = text.parse()?;
            if let Some(m) = self.alphabet {
                if m != set.alphabet_size() {
                    return Err(Error::DimensionMismatch { expected: set.alphabet_size(), got: m });
                }
            }
            return Ok(set);
        }
        match self.alphabet.or(inferred_m) {
            Some(m) => ConstraintSet::full(m),
            None => Err(Error::InvalidParameter("no constraint file given; pass --constraints or --alphabet".into())),
        }
    }
}

fn checked_config(global: &GlobalArgs, set: &ConstraintSet) -> Result<IntegrationConfig> {
    let cfg = global.config();
    cfg.validate()?;
    if cfg.backend_for(set).is_sampled() && cfg.samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo is needed for this constraint set; use at least {MIN_SAMPLES} samples"
        )));
    }
    Ok(cfg)
}

fn read_symbols(path: &Path, m: usize) -> Result<Vec<usize>> {
    fs::read(path)?
        .into_iter()
        .map(|b| {
            let s = b as usize;
            if s < m {
                Ok(s)
            } else {
                Err(Error::InvalidSymbol { symbol: s, m })
            }
        })
        .collect()
}

fn format_f64(x: f64) -> String {
    format!("{x}")
}

/// Runs the command; returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut data = Vec::new();
    let status = match execute(&cli, &mut data, stderr) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 1;
        }
    };
    let written = match &cli.global.output {
        Some(path) => fs::write(path, &data).map_err(Error::from),
        None => stdout.write_all(&data).map_err(Error::from),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return 1;
    }
    status
}

fn execute(cli: &Cli, out: &mut Vec<u8>, stderr: &mut dyn Write) -> Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Predict { counts, sequence } => {
            let inferred = (!counts.is_empty()).then_some(counts.len());
            let set = g.constraint_set(inferred)?;
            let cfg = checked_config(g, &set)?;
            let m = set.alphabet_size();
            let mut state = EstimatorState::new(set, cfg, g.seed)?;
            let symbols: Vec<usize> = match sequence {
                Some(path) => read_symbols(path, m)?,
                None => {
                    if !counts.is_empty() && counts.len() != m {
                        return Err(Error::DimensionMismatch { expected: m, got: counts.len() });
                    }
                    // replaying the counts symbol by symbol reaches the same state
                    counts.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect()
                }
            };
            for s in symbols {
                state.update(s)?;
            }
            let p = state.predict()?;
            for (prob, se) in p.probs.iter().zip(&p.std_errors) {
                writeln!(out, "{} {}", format_f64(*prob), format_f64(*se))?;
            }
            Ok(0)
        }
        Command::Compress { input } => {
            let set = g.constraint_set(None)?;
            let cfg = checked_config(g, &set)?;
            let symbols = read_symbols(input, set.alphabet_size())?;
            let buf = codec::encode(&symbols, &set, &cfg, g.seed)?;
            out.extend_from_slice(&buf.bytes);
            Ok(0)
        }
        Command::Decompress { input } => {
            let set = g.constraint_set(None)?;
            let cfg = checked_config(g, &set)?;
            if set.alphabet_size() > 256 {
                return Err(Error::InvalidParameter("symbol files hold at most 256 symbols".into()));
            }
            let bytes = fs::read(input)?;
            let symbols = codec::decode_bytes(&bytes, &set, &cfg)?;
            out.extend(symbols.into_iter().map(|s| s as u8));
            Ok(0)
        }
        Command::Redundancy { n, no_exact_worst, exact_avg, mixture, cn } => {
            let set = g.constraint_set(None)?;
            let cfg = checked_config(g, &set)?;
            let columns = ReportColumns {
                exact_worst: !no_exact_worst,
                exact_avg: *exact_avg,
                mixture_worst_regret: *mixture,
                cn_gap: *cn,
            };
            writeln!(out, "{CSV_HEADER}")?;
            let mut status = 0;
            for &ni in n {
                let report = redundancy_report(ni, &set, &cfg, columns);
                writeln!(out, "{}", report.csv_row())?;
                for e in &report.errors {
                    writeln!(stderr, "n={ni}: {e}")?;
                    status = 1;
                }
            }
            Ok(status)
        }
        Command::Integrate { alpha } => {
            let set = g.constraint_set(Some(alpha.len()))?;
            let cfg = checked_config(g, &set)?;
            let params = DirichletParams::new(alpha.clone())?;
            let est = dirichlet_measure(&set, &params, &cfg)?;
            writeln!(
                out,
                "value {}\nstd_error {}\nlog_value {}\nbackend {}",
                format_f64(est.value()),
                format_f64(est.std_error),
                format_f64(est.log_value),
                est.backend.name()
            )?;
            Ok(0)
        }
    }
}
