//! The `kpcfb` command-line front end.
//!
//! Exit codes: 0 on success, 1 on runtime failure (and on a failed
//! `verify`), 2 on usage or config errors.

pub mod bench;
pub mod config;
pub mod quantize;
pub mod simulate;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::codebook::CodebookSpec;
use crate::quantizer::ncsd_detect;

/// Seed used by subcommands when none is given.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "kpcfb",
    version,
    about = "Kronecker PSK codebook feedback: quantization, BER simulation, self-checks"
)]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run BER sweeps from a config file; writes CSV plus `<out>.manifest`.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "ber.csv")]
        out: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Quantize one channel (file of `re,im` lines, vertical-major order).
    Quantize {
        channel: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Check fast detection against exhaustive search, plus invariances and
    /// unitarity.
    Verify {
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 8)]
        max_const: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 256)]
        max_antennas: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Time fast detection over input lengths and fit the log-log slope.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        repetitions: usize,
        #[arg(long, default_value_t = 4)]
        n_const: u32,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 8)]
    pub m_th: usize,
    #[arg(long, default_value_t = 8)]
    pub m_tv: usize,
    #[arg(long, default_value_t = 4)]
    pub n_h: u32,
    #[arg(long, default_value_t = 4)]
    pub n_v: u32,
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<u8, CliError> {
    if cli.threads > 0 {
        // Fails only if the global pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    match cli.command {
        Command::Simulate { config, out: csv, seed } => {
            let rows = simulate::cmd_simulate(&config, &csv, seed)?;
            writeln!(out, "wrote {rows} rows to {}", csv.display()).map_err(io)?;
            Ok(0)
        }
        Command::Quantize { channel, spec } => {
            let text = std::fs::read_to_string(&channel)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", channel.display())))?;
            let spec = CodebookSpec {
                n_h: spec.n_h,
                n_v: spec.n_v,
                m_th: spec.m_th,
                m_tv: spec.m_tv,
            };
            let line = quantize::cmd_quantize(quantize::parse_channel(&text)?, &spec)?;
            writeln!(out, "{line}").map_err(io)?;
            Ok(0)
        }
        Command::Verify {
            max_len,
            max_const,
            trials,
            max_antennas,
            seed,
        } => {
            let opts = verify::VerifyOptions {
                max_len,
                max_const,
                trials,
                max_antennas,
                seed,
            };
            verify::cmd_verify(&opts, ncsd_detect, out)
        }
        Command::Bench {
            sizes,
            repetitions,
            n_const,
            seed,
        } => {
            let report = bench::cmd_bench(&sizes, repetitions, n_const, seed)?;
            write!(out, "{report}").map_err(io)?;
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code.clamp(0, 255) as u8;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
