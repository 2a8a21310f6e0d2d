//! Memory subsystem: TMEM latency and bandwidth, tile efficiency, chained-GEMM
//! traffic, STREAM Triad and TMEM power deltas.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::{GpuSpec, TmemParams};
use crate::units::Bandwidth;

/// Fixed TMEM geometry limits.
pub const TMEM_LANES: u32 = 128;
pub const TMEM_COLUMNS: u32 = 512;
pub const TMEM_CELL_BITS: u32 = 32;

/// Bytes moved per STREAM Triad element: two 8-byte reads, one 8-byte write.
pub const TRIAD_BYTES_PER_ELEMENT: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencyTier {
    TmemMiss,
    BaselineGlobalMiss,
}

impl FromStr for LatencyTier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tmem_miss" | "tmem-miss" => Ok(LatencyTier::TmemMiss),
            "baseline_global_miss" | "baseline-global-miss" => Ok(LatencyTier::BaselineGlobalMiss),
            _ => Err(Error::Unsupported(format!("unknown latency tier `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperandPath {
    TmemMma,
    GlobalLoad,
}

impl FromStr for OperandPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tmem_mma" | "tmem-mma" => Ok(OperandPath::TmemMma),
            "global_load" | "global-load" => Ok(OperandPath::GlobalLoad),
            _ => Err(Error::Unsupported(format!("unknown operand path `{s}`"))),
        }
    }
}

fn tmem(spec: &GpuSpec) -> Result<&TmemParams> {
    spec.tmem
        .as_ref()
        .ok_or_else(|| Error::NoTmem(spec.name.clone()))
}

/// Calibrated miss latency in cycles.
///
/// The baseline tier is available on TMEM-less machines through their
/// global-miss latency.
pub fn access_latency(spec: &GpuSpec, tier: LatencyTier) -> Result<f64> {
    match tier {
        LatencyTier::TmemMiss => Ok(tmem(spec)?.miss_latency_cycles),
        LatencyTier::BaselineGlobalMiss => {
            match (&spec.tmem, spec.memory.global_miss_latency_cycles) {
                (Some(t), _) => Ok(t.baseline_miss_latency_cycles),
                (None, Some(c)) => Ok(c),
                (None, None) => Err(Error::NoTmem(spec.name.clone())),
            }
        }
    }
}

/// Fractional latency reduction of the TMEM tier against the baseline tier.
pub fn tmem_latency_reduction(spec: &GpuSpec) -> Result<f64> {
    let t = access_latency(spec, LatencyTier::TmemMiss)?;
    let b = access_latency(spec, LatencyTier::BaselineGlobalMiss)?;
    Ok((b - t) / b)
}

/// Fraction of peak TMEM bandwidth reached by an m x n tile.
pub fn tile_efficiency(tile_m: u32, tile_n: u32) -> f64 {
    let e = tile_m.min(tile_n).max(1);
    match e {
        0..=31 => 0.45,
        32..=63 => 0.80 + 0.20 * (e as f64 / 32.0).log2(),
        64..=128 => 1.0,
        _ => 0.70,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathBandwidth {
    pub bandwidth: Bandwidth,
    /// tmem_mma / global_load.
    pub ratio: f64,
}

pub fn operand_path_bw(spec: &GpuSpec, path: OperandPath) -> Result<PathBandwidth> {
    let t = tmem(spec)?;
    let ratio = t.sustained_mma_bw.bytes_per_sec() / t.global_path_bw.bytes_per_sec();
    let bandwidth = match path {
        OperandPath::TmemMma => t.sustained_mma_bw,
        OperandPath::GlobalLoad => t.global_path_bw,
    };
    Ok(PathBandwidth { bandwidth, ratio })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficReport {
    pub bytes_moved: u64,
    pub bytes_saved_vs_baseline: u64,
    pub saved_rate_at_full_sm: Bandwidth,
    /// Calibrated savings estimate, echoed for comparison.
    pub annotated_savings: Option<Bandwidth>,
}

/// Global-memory traffic of `D = (A x B) x C` with `A: m x k`, `B: k x n`,
/// `C: n x n`, with or without the intermediate kept in TMEM.
pub fn chained_gemm_traffic(
    spec: &GpuSpec,
    m: u64,
    n: u64,
    k: u64,
    elem_bytes: u64,
    intermediate_resident: bool,
) -> Result<TrafficReport> {
    if m == 0 || n == 0 || k == 0 || elem_bytes == 0 {
        return Err(Error::Precondition("dimensions must be positive".into()));
    }
    let t = tmem(spec)?;
    let intermediate = m * n * elem_bytes;
    if intermediate_resident && intermediate > t.capacity_bytes {
        return Err(Error::TmemOverflow {
            needed: intermediate,
            capacity: t.capacity_bytes,
        });
    }
    // A, B and C read once, D written once.
    let operands = (m * k + k * n + n * n + m * n) * elem_bytes;
    let round_trip = 2 * intermediate;
    let baseline_total = operands + round_trip;
    let saved = if intermediate_resident { round_trip } else { 0 };
    let rate = saved as f64 / baseline_total as f64 * t.sustained_mma_bw.bytes_per_sec();
    Ok(TrafficReport {
        bytes_moved: baseline_total - saved,
        bytes_saved_vs_baseline: saved,
        saved_rate_at_full_sm: Bandwidth::from_bytes_per_sec(rate),
        annotated_savings: spec
            .annotations
            .chained_gemm_savings_tbps
            .map(Bandwidth::from_tbps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriadResult {
    pub bandwidth: Bandwidth,
    pub efficiency: f64,
    pub working_set_bytes: f64,
    /// Time for one Triad pass over `array_bytes / 8` elements.
    pub time_s: f64,
}

/// STREAM Triad bandwidth for arrays of `array_bytes` each.
pub fn stream_triad(spec: &GpuSpec, array_bytes: f64) -> Result<TriadResult> {
    if !(array_bytes > 0.0) {
        return Err(Error::Precondition("array_bytes must be positive".into()));
    }
    let s = &spec.memory.stream_eff;
    let working_set = 3.0 * array_bytes;
    let efficiency = if working_set < s.threshold_bytes {
        s.small_fraction
    } else {
        s.large_fraction
    };
    let bw = spec.memory.hbm_peak_bw.bytes_per_sec() * efficiency;
    let elements = array_bytes / 8.0;
    Ok(TriadResult {
        bandwidth: Bandwidth::from_bytes_per_sec(bw),
        efficiency,
        working_set_bytes: working_set,
        time_s: elements * TRIAD_BYTES_PER_ELEMENT / bw,
    })
}

/// Signed board-power change from staging accumulators in TMEM.
pub fn tmem_power_delta(matrix_dim: u64) -> f64 {
    const LARGE: f64 = -0.15;
    const SMALL: f64 = 0.04;
    let d = matrix_dim.max(1) as f64;
    if d >= 2048.0 {
        LARGE
    } else if d <= 256.0 {
        SMALL
    } else {
        let t = (d.log2() - 8.0) / (11.0 - 8.0);
        SMALL + t * (LARGE - SMALL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TmemLayout {
    pub fits: bool,
    pub bytes: u64,
}

pub fn tmem_layout(rows: u32, cols: u32, cell_bits: u32) -> TmemLayout {
    TmemLayout {
        fits: rows <= TMEM_LANES && cols <= TMEM_COLUMNS && cell_bits == TMEM_CELL_BITS,
        bytes: rows as u64 * cols as u64 * cell_bits as u64 / 8,
    }
}

/// L2 hit-rate range carried as metadata.
pub fn l2_hit_rate_annotation(spec: &GpuSpec) -> Option<(f64, f64)> {
    spec.annotations.l2_hit_rate_pct
}
