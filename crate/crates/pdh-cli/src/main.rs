//! Command-line front end for the spectral computation crate.
//!
//! Exit codes: 0 success, 1 verification failure, 2 precision exhaustion,
//! 3 bad input.

mod cache;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Ctx};
use output::{emit, Format};
use pdspec::real::level_precision;

const LEVEL_CAP: usize = 24;

#[derive(Parser)]
#[command(name = "pdh", version, about = "Spectral bands, coding and dynamics of the period-doubling Hamiltonian")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// coupling constant as an exact decimal string
    #[arg(long, default_value = "2")]
    lambda: String,
    /// approximation level
    #[arg(long, default_value_t = 6)]
    level: usize,
    /// working precision in bits (0 = derived from the level)
    #[arg(long, default_value_t = 0)]
    bits: u32,
    /// directory for the level cache (env PDH_CACHE as fallback)
    #[arg(long)]
    cache: Option<PathBuf>,
    /// output format
    #[arg(long, default_value = "json")]
    format: Format,
    /// write the artifact here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn bits(&self) -> u32 {
        if self.bits == 0 {
            level_precision(self.level).max(128)
        } else {
            self.bits
        }
    }

    fn cache_dir(&self) -> Option<PathBuf> {
        self.cache
            .clone()
            .or_else(|| std::env::var_os("PDH_CACHE").map(PathBuf::from))
    }

    fn check_level(&self) -> Result<(), CliError> {
        if self.level > LEVEL_CAP {
            return Err(CliError::Input(format!(
                "level {} exceeds the cap {LEVEL_CAP}",
                self.level
            )));
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Spectral bands of one level
    Bands(Common),
    /// The optimal covering at one level
    Covering(Common),
    /// Certified spectral gaps with their exact labels
    Gaps(Common),
    /// Integrated density of states at a band zero, exact
    Ids {
        /// binary code of the zero (empty for the top-level zero)
        #[arg(long, default_value = "")]
        zero: String,
    },
    /// Trace orbit of one energy
    Orbit {
        #[command(flatten)]
        common: Common,
        /// energy as a decimal string
        #[arg(long)]
        energy: String,
        /// number of trace values to compute
        #[arg(long, default_value_t = 24)]
        horizon: usize,
    },
    /// The Fibonacci-counted separating family and the dimension bound
    Dimension(Common),
    /// Contraction picture of the plane trace map (parameter-free)
    Dynamics {
        #[arg(long, default_value_t = 128)]
        bits: u32,
        #[arg(long, default_value_t = 14)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        grid: usize,
        #[arg(long, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every invariant suite and report pass/fail per suite
    Verify {
        #[command(flatten)]
        common: Common,
        /// verify all of 0.2, 0.5, 1, 2, 4 instead of the single λ
        #[arg(long)]
        all_lambdas: bool,
    },
}

fn run() -> Result<(), CliError> {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                return Err(CliError::Input(e.to_string()));
            }
            // --help / --version
            print!("{e}");
            return Ok(());
        }
    };
    let io_err = |e: std::io::Error| CliError::Input(format!("write failed: {e}"));
    match cli.command {
        Command::Bands(c) => {
            c.check_level()?;
            let cache = c.cache_dir();
            let ctx = Ctx::new(&c.lambda, c.bits(), cache.as_deref())?;
            let t = commands::cmd_bands(&ctx, c.level)?;
            emit(c.out.as_deref(), &t.render(c.format)).map_err(io_err)
        }
        Command::Covering(c) => {
            c.check_level()?;
            let cache = c.cache_dir();
            let ctx = Ctx::new(&c.lambda, c.bits(), cache.as_deref())?;
            let t = commands::cmd_covering(&ctx, c.level)?;
            emit(c.out.as_deref(), &t.render(c.format)).map_err(io_err)
        }
        Command::Gaps(c) => {
            c.check_level()?;
            let cache = c.cache_dir();
            let ctx = Ctx::new(&c.lambda, c.bits(), cache.as_deref())?;
            let t = commands::cmd_gaps(&ctx, c.level)?;
            emit(c.out.as_deref(), &t.render(c.format)).map_err(io_err)
        }
        Command::Ids { zero } => {
            let s = commands::cmd_ids(&zero)?;
            emit(None, &s).map_err(io_err)
        }
        Command::Orbit {
            common: c,
            energy,
            horizon,
        } => {
            c.check_level()?;
            let cache = c.cache_dir();
            let ctx = Ctx::new(&c.lambda, c.bits(), cache.as_deref())?;
            let t = commands::cmd_orbit(&ctx, &energy, horizon)?;
            emit(c.out.as_deref(), &t.render(c.format)).map_err(io_err)
        }
        Command::Dimension(c) => {
            c.check_level()?;
            let cache = c.cache_dir();
            let ctx = Ctx::new(&c.lambda, c.bits(), cache.as_deref())?;
            let t = commands::cmd_dimension(&ctx, c.level)?;
            emit(c.out.as_deref(), &t.render(c.format)).map_err(io_err)
        }
        Command::Dynamics {
            bits,
            steps,
            grid,
            format,
            out,
        } => {
            let t = commands::cmd_dynamics(bits, steps, grid)?;
            emit(out.as_deref(), &t.render(format)).map_err(io_err)
        }
        Command::Verify {
            common: c,
            all_lambdas,
        } => {
            c.check_level()?;
            let lambdas: Vec<String> = if all_lambdas {
                ["0.2", "0.5", "1", "2", "4"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            } else {
                vec![c.lambda.clone()]
            };
            let cache = c.cache_dir();
            let report = commands::cmd_verify(&lambdas, c.level, c.bits(), cache.as_deref())?;
            emit(c.out.as_deref(), &report).map_err(io_err)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
