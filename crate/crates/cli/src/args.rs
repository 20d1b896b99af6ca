use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sfd_core::bench::Sweep;
use sfd_core::io::Format;
use sfd_core::{Algo, PowerConfig};

#[derive(Debug, Parser)]
#[command(name = "sfd", version, about = "Streaming sparse matrix sketching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Sketch a matrix stream in one pass.
    Sketch(SketchArgs),
    /// Write a synthetic ±1 stream.
    Generate(GenerateArgs),
    /// Score a sketch against its matrix.
    Eval(EvalArgs),
    /// Time FD and SFD across one swept parameter.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct PowerArgs {
    /// Accuracy target of the subspace iteration.
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    /// Multiplier on ln(m/ε)/ε in the sweep count.
    #[arg(long = "q-const", default_value_t = 1.0)]
    pub q_const: f64,
    /// Use the fixed fast sweep count instead of the derived one.
    #[arg(long = "fast-q", conflicts_with = "q")]
    pub fast_q: bool,
    /// Explicit sweep count.
    #[arg(long)]
    pub q: Option<usize>,
}

impl PowerArgs {
    pub fn config(&self) -> PowerConfig {
        let q_override = if self.fast_q {
            Some(PowerConfig::FAST_Q)
        } else {
            self.q
        };
        PowerConfig {
            epsilon: self.epsilon,
            q_constant: self.q_const,
            q_override,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SketchArgs {
    /// MatrixMarket or plain row file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_algo)]
    pub algo: Algo,
    /// Sketch rows ℓ.
    #[arg(long)]
    pub ell: usize,
    /// Failure budget of the spectral verifier.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    /// Column count for plain input without a header.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Nonzeros per row.
    #[arg(long)]
    pub z: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "plain", value_parser = parse_format)]
    pub format: Format,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub sketch: PathBuf,
    /// Rank of the projection error.
    #[arg(long)]
    pub k: usize,
    /// Algorithm label; read from the sketch's manifest when omitted.
    #[arg(long, value_parser = parse_algo)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Sweep,
    #[arg(long = "out-csv")]
    pub out_csv: PathBuf,
    /// Multiplies n, d and z of every cell.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub power: PowerArgs,
    /// Timed runs per cell; the fastest is kept.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Skip the accuracy metrics and only time the sketchers.
    #[arg(long = "no-metrics")]
    pub no_metrics: bool,
    /// Fail unless the nnz sweep shows SFD growing with z and FD flat.
    #[arg(long = "check-trend")]
    pub check_trend: bool,
}

#[derive(Clone, Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the primary output here instead of the recorded path.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    s.parse().map_err(|e: sfd_core::Error| e.to_string())
}
