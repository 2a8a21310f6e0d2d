//! Decompression Engine model: per-format profiles, compression-ratio
//! sensitivity, batching curves and configuration advice.

mod fit;
mod model;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::machine::{DeParams, GpuSpec};
use crate::units::Bandwidth;

pub use fit::{fit_chunk_model, parse_measurements, ChunkFit};
pub use model::{
    pipeline_depth, saturation_point, sweep_concurrencies, BatchCurve, BatchPoint, Saturation,
};

/// Per-format calibration. Ratio and input rate are absent for formats where
/// they were not reported.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeFormatProfile {
    pub name: String,
    pub compression_ratio: Option<f64>,
    pub input: Option<Bandwidth>,
    pub output: Bandwidth,
    /// End-to-end latency for the calibration payload.
    pub latency_ms: f64,
    pub use_case: String,
}

impl DeFormatProfile {
    pub fn output_gbps(&self) -> f64 {
        self.output.gbps()
    }

    pub fn input_gbps(&self) -> Result<f64> {
        self.input
            .map(Bandwidth::gbps)
            .ok_or_else(|| Error::missing(format!("{} input throughput", self.name), "N/A"))
    }

    pub fn ratio(&self) -> Result<f64> {
        self.compression_ratio
            .ok_or_else(|| Error::missing(format!("{} compression ratio", self.name), "N/A"))
    }
}

/// LZ4 measurement for one data pattern.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternProfile {
    pub name: String,
    pub compression_ratio: f64,
    pub input: Bandwidth,
    pub output: Bandwidth,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChunkProfile {
    pub chunk_bytes: u64,
    pub single_rate: Bandwidth,
    pub pipeline_depth: u32,
    pub saturation_batch: u32,
    pub peak: Bandwidth,
    pub max_speedup: f64,
}

pub(crate) fn de_params(spec: &GpuSpec) -> Result<&DeParams> {
    spec.de.as_ref().ok_or_else(|| {
        Error::missing(
            format!("{} decompression engine", spec.name),
            "software decompression only",
        )
    })
}

pub fn format_profile<'a>(spec: &'a GpuSpec, format: &str) -> Result<&'a DeFormatProfile> {
    let de = de_params(spec)?;
    de.format_profiles
        .get(&format.to_ascii_lowercase())
        .ok_or_else(|| Error::UnknownFormat(format.to_string()))
}

pub fn chunk_profile(spec: &GpuSpec, chunk_bytes: u64) -> Result<&ChunkProfile> {
    de_params(spec)?
        .chunk_profiles
        .get(&chunk_bytes)
        .ok_or(Error::UnknownChunk(chunk_bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub input_gbps: f64,
    pub output_gbps: f64,
    /// Latency for the calibration payload.
    pub latency_ms: f64,
}

/// Input rate, output rate and payload latency for a compression ratio and
/// the output rate measured for its data pattern.
pub fn sensitivity(
    spec: &GpuSpec,
    compression_ratio: f64,
    pattern_output_gbps: f64,
) -> Result<Sensitivity> {
    if !(compression_ratio >= 1.0) {
        return Err(Error::Precondition(format!(
            "compression ratio must be >= 1, got {compression_ratio}"
        )));
    }
    if !(pattern_output_gbps > 0.0) {
        return Err(Error::Precondition("output rate must be positive".into()));
    }
    let de = de_params(spec)?;
    let (lo, hi) = de.output_band;
    let output = pattern_output_gbps.clamp(lo.gbps(), hi.gbps());
    let latency_s = de.payload_bytes / (output * 1e9);
    Ok(Sensitivity {
        input_gbps: pattern_output_gbps / compression_ratio,
        output_gbps: output,
        latency_ms: latency_s * 1e3 + de.latency_overhead_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchThroughput {
    pub aggregate_gbps: f64,
    pub efficiency: f64,
    pub speedup_vs_sequential: f64,
}

pub fn batch_throughput(
    spec: &GpuSpec,
    chunk_bytes: u64,
    concurrency: u32,
) -> Result<BatchThroughput> {
    if concurrency == 0 {
        return Err(Error::Precondition("concurrency must be >= 1".into()));
    }
    let c = chunk_profile(spec, chunk_bytes)?;
    let p = c.point(concurrency);
    Ok(BatchThroughput {
        aggregate_gbps: p.aggregate_gbps,
        efficiency: p.efficiency,
        speedup_vs_sequential: p.aggregate_gbps / c.single_rate.gbps(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeWorkload {
    pub typical_object_bytes: u64,
    pub latency_budget_ms: f64,
    pub data_kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub format: String,
    pub chunk_bytes: u64,
    pub concurrency: u32,
    /// Aggregate rate at the recommended concurrency.
    pub predicted_gbps: f64,
    /// Rate reachable by raising concurrency to saturation.
    pub peak_gbps: f64,
    /// Time to decompress one object at the predicted rate.
    pub object_latency_ms: f64,
    pub meets_latency_budget: bool,
}

const SMALL_OBJECT_BYTES: u64 = 64 * 1024;

pub fn recommend_config(spec: &GpuSpec, workload: &DeWorkload) -> Result<Recommendation> {
    if workload.typical_object_bytes == 0 || !(workload.latency_budget_ms > 0.0) {
        return Err(Error::Precondition(
            "workload fields must be positive".into(),
        ));
    }
    let de = de_params(spec)?;
    let kind = workload.data_kind.to_ascii_lowercase();
    let format = if kind.contains("numeric") || kind.contains("scientific") {
        "bitcomp"
    } else if kind.contains("realtime") || kind.contains("real-time") {
        "snappy"
    } else {
        "zstd"
    };
    format_profile(spec, format)?;
    let chunk_bytes = if workload.typical_object_bytes < SMALL_OBJECT_BYTES {
        32 * 1024
    } else {
        256 * 1024
    };
    let c = chunk_profile(spec, chunk_bytes)?;
    let t = batch_throughput(spec, chunk_bytes, c.pipeline_depth)?;
    let object_latency_ms = workload.typical_object_bytes as f64 / (t.aggregate_gbps * 1e9) * 1e3
        + de.latency_overhead_ms;
    Ok(Recommendation {
        format: format.to_string(),
        chunk_bytes,
        concurrency: c.pipeline_depth,
        predicted_gbps: t.aggregate_gbps,
        peak_gbps: c.peak.gbps(),
        object_latency_ms,
        meets_latency_budget: object_latency_ms <= workload.latency_budget_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::builtin_spec;

    fn b200() -> GpuSpec {
        builtin_spec("B200").unwrap()
    }

    #[test]
    fn profiles() {
        let b = b200();
        let bc = format_profile(&b, "bitcomp").unwrap();
        assert_eq!((bc.output_gbps(), bc.latency_ms), (462.37, 0.227));
        let ans = format_profile(&b, "ans").unwrap();
        assert_eq!(ans.output_gbps(), 539.21);
        assert!(matches!(
            ans.input_gbps(),
            Err(Error::MissingCalibration { .. })
        ));
        let gz = format_profile(&b, "gzip").unwrap();
        assert_eq!((gz.input_gbps().unwrap(), gz.output_gbps()), (42.0, 83.83));
        assert!(matches!(
            format_profile(&b, "brotli"),
            Err(Error::UnknownFormat(_))
        ));
        let h = builtin_spec("H200").unwrap();
        assert!(matches!(
            format_profile(&h, "lz4"),
            Err(Error::MissingCalibration { .. })
        ));
    }

    #[test]
    fn sensitivity_rows() {
        let b = b200();
        let s = sensitivity(&b, 15.02, 219.80).unwrap();
        assert!((s.input_gbps - 14.63).abs() / 14.63 < 0.015);
        let s = sensitivity(&b, 245.45, 209.83).unwrap();
        assert!((s.input_gbps - 0.85).abs() / 0.85 < 0.015);
        let s = sensitivity(&b, 1.0, 172.55).unwrap();
        assert_eq!(s.input_gbps, 172.55);
        for p in b.de.as_ref().unwrap().pattern_profiles.values() {
            let s = sensitivity(&b, p.compression_ratio, p.output.gbps()).unwrap();
            assert!(
                (s.latency_ms - p.latency_ms).abs() / p.latency_ms < 0.03,
                "{}",
                p.name
            );
        }
        assert!(sensitivity(&b, 0.5, 100.0).is_err());
        assert!(sensitivity(&b, 2.0, 0.0).is_err());
    }

    #[test]
    fn batch_examples() {
        let b = b200();
        let t = batch_throughput(&b, 32768, 1024).unwrap();
        assert!((t.aggregate_gbps - 53.8).abs() < 0.01);
        assert!((t.speedup_vs_sequential - 71.95).abs() / 71.95 < 0.02);
        assert_eq!(batch_throughput(&b, 32768, 1).unwrap().efficiency, 1.0);
        assert!(batch_throughput(&b, 262144, 4).unwrap().efficiency >= 0.85);
        assert_eq!(
            batch_throughput(&b, 1000, 4),
            Err(Error::UnknownChunk(1000))
        );
        assert!(batch_throughput(&b, 32768, 0).is_err());
    }

    #[test]
    fn recommendations() {
        let b = b200();
        let w = |bytes, kind: &str| DeWorkload {
            typical_object_bytes: bytes,
            latency_budget_ms: 1.0,
            data_kind: kind.into(),
        };
        let r = recommend_config(&b, &w(4096, "generic")).unwrap();
        assert_eq!(
            (r.format.as_str(), r.chunk_bytes, r.concurrency),
            ("zstd", 32768, 16)
        );
        assert!((r.predicted_gbps - 12.0).abs() < 1e-9);
        assert_eq!(r.peak_gbps, 53.8);
        let r = recommend_config(&b, &w(1 << 30, "scientific")).unwrap();
        assert_eq!(
            (r.format.as_str(), r.chunk_bytes, r.concurrency),
            ("bitcomp", 262144, 4)
        );
        assert_eq!(
            recommend_config(&b, &w(4096, "realtime")).unwrap().format,
            "snappy"
        );
        assert!(recommend_config(&b, &w(0, "x")).is_err());
    }
}
