//! Machine descriptions: the calibration data behind every prediction.

mod load;
pub mod parse;
mod presets;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::decomp::{ChunkProfile, DeFormatProfile, PatternProfile};
use crate::precision::Precision;
use crate::tensor_core::Tile;
use crate::units::Bandwidth;

pub use load::load_machine_file;
pub use presets::{builtin_spec, builtin_text, CalibrationSet, BUILTIN_NAMES};
pub use validate::{derived_peak_consistency, validate_spec, PeakConsistency};
pub use write::to_machine_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Generation {
    Hopper,
    Blackwell,
}

impl Generation {
    pub fn as_str(self) -> &'static str {
        match self {
            Generation::Hopper => "hopper",
            Generation::Blackwell => "blackwell",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpuSpec {
    pub name: String,
    pub generation: Generation,
    /// Name of the machine this one is compared against, if any.
    pub baseline: Option<String>,
    pub sm_count: u32,
    pub transistors_billion: f64,
    pub hbm_capacity_bytes: u64,
    pub power: PowerParams,
    pub memory: MemoryParams,
    pub tensor: TensorCalibration,
    pub tmem: Option<TmemParams>,
    pub de: Option<DeParams>,
    pub dgemm: Vec<DgemmPoint>,
    pub llm: BTreeMap<(String, Precision), LlmCell>,
    pub llm_latency: Option<LatencyTable>,
    pub training: BTreeMap<(String, u32), TrainingCell>,
    pub spmv: BTreeMap<String, SpmvCell>,
    pub workload: WorkloadCalibration,
    pub annotations: Annotations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerParams {
    pub board_power_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryParams {
    pub hbm_peak_bw: Bandwidth,
    pub stream_eff: StreamEfficiency,
    pub global_miss_latency_cycles: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamEfficiency {
    pub small_fraction: f64,
    pub large_fraction: f64,
    pub threshold_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakEntry {
    pub throughput: f64,
    /// Measured percent of theoretical peak (0..=100), when reported.
    pub pct_of_peak: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TileLatency {
    pub tile: Tile,
    pub cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstrCalibration {
    pub input: Precision,
    pub accum: Precision,
    pub tile: Tile,
    pub latency_cycles: f64,
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TensorCalibration {
    pub peak: BTreeMap<Precision, PeakEntry>,
    /// Explicit theoretical peaks, used where no %-of-peak was measured.
    pub theoretical: BTreeMap<Precision, f64>,
    pub latency: Vec<TileLatency>,
    pub instr: Vec<InstrCalibration>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TmemParams {
    pub capacity_bytes: u64,
    pub lanes: u32,
    pub columns: u32,
    pub cell_bits: u32,
    pub read_bw: Bandwidth,
    pub write_bw: Bandwidth,
    pub miss_latency_cycles: f64,
    pub baseline_miss_latency_cycles: f64,
    pub sustained_mma_bw: Bandwidth,
    pub global_path_bw: Bandwidth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeParams {
    pub format_profiles: BTreeMap<String, DeFormatProfile>,
    pub pattern_profiles: BTreeMap<String, PatternProfile>,
    pub chunk_profiles: BTreeMap<u64, ChunkProfile>,
    pub output_ceiling: Bandwidth,
    pub output_band: (Bandwidth, Bandwidth),
    pub efficiency_threshold: f64,
    pub saturation_margin: f64,
    pub latency_overhead_ms: f64,
    pub payload_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgemmPoint {
    pub dim: u64,
    pub pct_of_peak: f64,
    pub tflops: Option<f64>,
}

impl DgemmPoint {
    pub fn fraction(&self) -> f64 {
        self.pct_of_peak / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlmCell {
    pub tok_per_s: f64,
    pub bw_util_pct: f64,
    pub perplexity: Option<f64>,
    pub delta_ppl_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyTable {
    pub model: String,
    pub precision: Precision,
    pub seq_len: u32,
    pub batches: Vec<u32>,
    pub latency_ms: Vec<f64>,
    pub tok_per_s: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingCell {
    pub throughput: f64,
    pub unit: String,
    pub time_to_accuracy_hrs: f64,
    pub per_watt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SpmvCell {
    pub sparsity_pct: Option<f64>,
    pub compressed_gflops: Option<f64>,
    pub speedup: Option<f64>,
    pub compressed_time_ms: Option<f64>,
    /// Uncompressed rate, for machines without hardware decompression.
    pub gflops: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct WorkloadCalibration {
    pub attention_latency_us: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Annotations {
    pub l2_hit_rate_pct: Option<(f64, f64)>,
    pub scheduler_stall_reduction_pct: Option<(f64, f64)>,
    pub pipeline_stages_high_batch: Option<(f64, f64)>,
    pub pipeline_stages_low_batch: Option<(f64, f64)>,
    pub chained_gemm_savings_tbps: Option<f64>,
}

/// One failed invariant: the offending field and the rule it breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    pub(crate) fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

impl GpuSpec {
    pub fn has_tmem(&self) -> bool {
        self.tmem.is_some()
    }

    /// Theoretical peak for a precision: explicit entry if present, else
    /// measured throughput divided by its %-of-peak.
    pub fn theoretical_peak(&self, p: Precision) -> Option<f64> {
        if let Some(v) = self.tensor.theoretical.get(&p) {
            return Some(*v);
        }
        let e = self.tensor.peak.get(&p)?;
        e.pct_of_peak.map(|pct| e.throughput / (pct / 100.0))
    }
}
