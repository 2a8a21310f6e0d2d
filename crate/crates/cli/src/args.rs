use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "blackmodel",
    version,
    about = "Calibrated B200/H200 performance model"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Machine to model.
    #[arg(long, global = true, default_value = "B200")]
    pub gpu: String,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub output: OutputFormat,
    /// Machine file that overrides the built-in with the same name.
    #[arg(long, global = true)]
    pub spec: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one workload prediction.
    Predict {
        #[command(subcommand)]
        what: PredictCmd,
        /// Compare against this machine instead of the declared baseline.
        #[arg(long, global = true)]
        baseline: Option<String>,
        #[arg(long, global = true)]
        no_baseline: bool,
    },
    /// Recompute a reference table and compare it with the bundled values.
    Reproduce {
        /// Table id, T1..T14.
        #[arg(required_unless_present = "all")]
        table: Option<String>,
        #[arg(long, conflicts_with = "table")]
        all: bool,
    },
    /// Quantize a vector file (one decimal per line).
    Quantize {
        /// e2m1, e3m2, e2m3, e4m3, e5m2, e8m0, mxfp4 or nvfp4.
        #[arg(long)]
        format: String,
        #[arg(long)]
        input: PathBuf,
        /// Where to write hex codes; one block per line for block formats.
        #[arg(long)]
        codes: Option<PathBuf>,
    },
    /// Fit a decompression batching profile to `concurrency,gbps` measurements.
    FitDe {
        csv: PathBuf,
        #[arg(long)]
        chunk_bytes: u64,
        /// Print a machine-file fragment instead of the report.
        #[arg(long)]
        write: bool,
    },
    /// List conflicting published values.
    Ledger,
}

#[derive(Debug, Subcommand)]
pub enum PredictCmd {
    /// FP64 DGEMM for an n x n x n problem.
    Dgemm {
        #[arg(long)]
        n: u64,
    },
    /// Inference throughput for a calibrated model and precision.
    Llm {
        #[arg(long)]
        model: String,
        #[arg(long)]
        precision: String,
        #[arg(long, default_value_t = 32)]
        batch: u32,
        #[arg(long, default_value_t = 2048)]
        seq: u32,
    },
    /// Per-request inference latency against batch size.
    Latency {
        #[arg(long)]
        batch: u32,
        #[arg(long, default_value_t = 2048)]
        seq: u32,
    },
    /// STREAM Triad bandwidth.
    Stream {
        /// Size of each of the three arrays, in GB.
        #[arg(long)]
        array_gb: f64,
    },
    /// Sparse matrix-vector product.
    Spmv {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        uncompressed: bool,
        #[arg(long, requires = "nnz")]
        rows: Option<u64>,
        #[arg(long, requires = "rows")]
        nnz: Option<u64>,
        #[arg(long, default_value_t = blackmodel_core::workloads::RLE_ROW_POINTER_RATIO)]
        index_ratio: f64,
    },
    /// End-to-end training throughput.
    Training {
        #[arg(long)]
        model: String,
        #[arg(long)]
        batch: u32,
    },
    /// Sustained Tensor Core peak for a precision.
    Peak {
        #[arg(long)]
        precision: String,
    },
    /// Decompression Engine aggregate throughput at a concurrency.
    Decomp {
        #[arg(long)]
        chunk_bytes: u64,
        #[arg(long)]
        concurrency: u32,
    },
    /// Workload summary against the baseline machine.
    Summary,
}
