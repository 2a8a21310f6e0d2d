//! Workload-level estimators composed from the calibration tables and the
//! sub-models.

mod hpc;
mod llm;
mod summary;
mod training;

use serde::Serialize;

use crate::error::Result;
use crate::machine::GpuSpec;
use crate::precision::Precision;
use crate::prediction::Prediction;

pub use hpc::{
    dgemm_efficiency, dgemm_fp64, spmv, spmv_traffic, stream, traffic_reduction, SparseProfile,
    SpmvTraffic, RLE_ROW_POINTER_RATIO,
};
pub use llm::{
    fit_latency, llm_cell, llm_latency, llm_throughput, precision_speedup, LatencyFit,
    LLM_CALIBRATED_BATCH, LLM_CALIBRATED_SEQ,
};
pub use summary::{summary, SummaryRow};
pub use training::{
    decompose, energy_efficiency, speedup_decomposition, training_cell, training_throughput,
    Decomposition, DecompositionKind,
};

/// A workload request for [`predict`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkloadSpec {
    Dgemm {
        n: u64,
    },
    LlmInfer {
        model: String,
        precision: Precision,
        batch: u32,
        seq_len: u32,
    },
    LlmLatency {
        batch: u32,
        seq_len: u32,
    },
    Stream {
        array_bytes: f64,
    },
    Spmv {
        matrix: String,
        profile: Option<SparseProfile>,
        compressed: bool,
    },
    Training {
        model: String,
        batch: u32,
    },
}

pub fn predict(spec: &GpuSpec, w: &WorkloadSpec, baseline: Option<&GpuSpec>) -> Result<Prediction> {
    match w {
        WorkloadSpec::Dgemm { n } => dgemm_fp64(spec, *n, baseline),
        WorkloadSpec::LlmInfer {
            model,
            precision,
            batch,
            seq_len,
        } => llm_throughput(spec, model, *precision, *batch, *seq_len, baseline),
        WorkloadSpec::LlmLatency { batch, seq_len } => {
            llm_latency(spec, *batch, *seq_len, baseline)
        }
        WorkloadSpec::Stream { array_bytes } => stream(spec, *array_bytes, baseline),
        WorkloadSpec::Spmv {
            matrix,
            profile,
            compressed,
        } => spmv(spec, matrix, profile.as_ref(), *compressed, baseline),
        WorkloadSpec::Training { model, batch } => {
            training_throughput(spec, model, *batch, baseline)
        }
    }
}
