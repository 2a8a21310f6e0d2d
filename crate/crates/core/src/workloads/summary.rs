use serde::Serialize;

use super::{
    dgemm_fp64, llm_latency, llm_throughput, precision_speedup, spmv, stream, training_cell,
};
use crate::error::{Error, Result};
use crate::machine::GpuSpec;
use crate::precision::Precision;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub workload: &'static str,
    pub metric: &'static str,
    pub value: Option<f64>,
    pub baseline: Option<f64>,
    pub improvement: Option<f64>,
    /// Set when the improvement is not value / baseline.
    pub improvement_basis: Option<&'static str>,
    pub lower_is_better: bool,
    pub key_feature: &'static str,
}

fn opt(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::MissingCalibration { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn attention_us(spec: &GpuSpec) -> Result<f64> {
    spec.workload
        .attention_latency_us
        .ok_or_else(|| Error::missing(format!("{} attention block", spec.name), "not calibrated"))
}

fn calibrated_latency(spec: &GpuSpec, batch: u32) -> Result<f64> {
    let p = llm_latency(spec, batch, 2048, None)?;
    Ok(p.secondary("calibrated").unwrap_or(p.value))
}

fn per_watt(spec: &GpuSpec) -> Result<f64> {
    training_cell(spec, "gpt-1.3b", 128)?
        .per_watt
        .ok_or_else(|| Error::missing(format!("{} training per-watt", spec.name), "not calibrated"))
}

/// One row per workload class, each produced by the corresponding estimator.
pub fn summary(spec: &GpuSpec, baseline: &GpuSpec) -> Result<Vec<SummaryRow>> {
    type Getter = fn(&GpuSpec) -> Result<f64>;
    let llm = |m: &str, p: Precision| {
        let m = m.to_string();
        move |s: &GpuSpec| llm_throughput(s, &m, p, 32, 2048, None).map(|x| x.value)
    };
    type Row<'a> = (
        &'a str,
        &'a str,
        Box<dyn Fn(&GpuSpec) -> Result<f64>>,
        bool,
        &'a str,
    );
    let rows: Vec<Row> = vec![
        (
            "LLM Inf. (7B, FP4)",
            "tok/s",
            Box::new(llm("mistral-7b", Precision::Fp4)),
            false,
            "FP4 Tensor Cores",
        ),
        (
            "LLM Inf. (8x7B, FP8)",
            "tok/s",
            Box::new(llm("mixtral-8x7b", Precision::Fp8)),
            false,
            "5th Gen TC, TMEM",
        ),
        (
            "LLM Inf. (BS=1, FP8)",
            "Latency (ms)",
            Box::new(|s: &GpuSpec| calibrated_latency(s, 1)),
            true,
            "Latency pipeline",
        ),
        (
            "LLM Inf. (8x22B, FP8)",
            "tok/s",
            Box::new(llm("mixtral-8x22b", Precision::Fp8)),
            false,
            "HBM3e, compression",
        ),
        (
            "Attention Block",
            "Latency (us)",
            Box::new(attention_us as Getter),
            true,
            "TMEM",
        ),
        (
            "HPC DGEMM (FP64)",
            "TFLOPS",
            Box::new(|s: &GpuSpec| dgemm_fp64(s, 32768, None).map(|p| p.value)),
            false,
            "Doubled FP64 units",
        ),
        (
            "STREAM Triad",
            "BW (TB/s)",
            Box::new(|s: &GpuSpec| stream(s, 128e9, None).map(|p| p.value)),
            false,
            "HBM3e",
        ),
        (
            "SpMV (compressed)",
            "GFLOPS",
            Box::new(|s: &GpuSpec| spmv(s, "ldoor", None, s.de.is_some(), None).map(|p| p.value)),
            false,
            "Decomp engine",
        ),
        (
            "GPT Training (1.3B)",
            "tok/s",
            Box::new(|s: &GpuSpec| training_cell(s, "gpt-1.3b", 128).map(|c| c.throughput)),
            false,
            "CTA pairs, TMEM, TC",
        ),
        (
            "ResNet Training",
            "img/s",
            Box::new(|s: &GpuSpec| training_cell(s, "resnet-50", 1024).map(|c| c.throughput)),
            false,
            "5th Gen TC, mem BW",
        ),
        (
            "Energy Eff. (Training)",
            "tok/s/W",
            Box::new(per_watt as Getter),
            false,
            "Process, efficiency",
        ),
    ];
    let mut out = Vec::with_capacity(rows.len());
    for (workload, metric, get, lower_is_better, key_feature) in rows {
        let value = opt(get(spec))?;
        let base = opt(get(baseline))?;
        let (improvement, improvement_basis) = match (value, base) {
            (Some(v), Some(b)) if lower_is_better => (Some(b / v), None),
            (Some(v), Some(b)) => (Some(v / b), None),
            (Some(_), None) if workload.starts_with("LLM Inf. (7B") => (
                opt(precision_speedup(
                    spec,
                    "mistral-7b",
                    Precision::Fp4,
                    Precision::Fp16,
                ))?,
                Some("vs FP16"),
            ),
            _ => (None, None),
        };
        out.push(SummaryRow {
            workload,
            metric,
            value,
            baseline: base,
            improvement,
            improvement_basis,
            lower_is_better,
            key_feature,
        });
    }
    Ok(out)
}
